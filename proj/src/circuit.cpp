#include "twflat/circuit.hpp"

#include <algorithm>
#include <queue>

#include "twflat/error.hpp"

namespace twf {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::ZVar: return "zvar";
    case Op::Const: return "const";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Not: return "not";
  }
  return "?";
}

bool is_leaf(Op op) { return op == Op::Input || op == Op::ZVar || op == Op::Const; }

namespace {

bool op_allowed(CircuitKind kind, Op op) {
  switch (op) {
    case Op::Input:
    case Op::Const: return true;
    case Op::ZVar:
    case Op::Add:
    case Op::Mul: return kind == CircuitKind::Arithmetic;
    case Op::And:
    case Op::Or:
    case Op::Not: return kind == CircuitKind::Boolean;
  }
  return false;
}

bool arity_allowed(Op op, std::size_t arity) {
  if (is_leaf(op)) return arity == 0;
  if (op == Op::Not) return arity == 1;
  if (op == Op::Add || op == Op::Or) return arity == 1 || arity == 2;
  return arity == 2;
}

std::optional<std::vector<int>> infer_levels_of(const std::vector<Gate>& gates) {
  const std::size_t n = gates.size();
  std::vector<std::vector<std::pair<std::size_t, int>>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (GateId in : gates[i].inputs()) {
      adj[i].push_back({in - 1, -1});
      adj[in - 1].push_back({i, +1});
    }
  std::vector<int> level(n, 0);
  std::vector<bool> seen(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp{s};
    seen[s] = true;
    level[s] = 0;
    for (std::size_t q = 0; q < comp.size(); ++q) {
      std::size_t u = comp[q];
      for (auto [v, d] : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          level[v] = level[u] + d;
          comp.push_back(v);
        } else if (level[v] != level[u] + d) {
          return std::nullopt;
        }
      }
    }
    int lo = level[s];
    for (std::size_t v : comp) lo = std::min(lo, level[v]);
    for (std::size_t v : comp) level[v] -= lo;
  }
  return level;
}

}  // namespace

std::size_t Circuit::size_ops() const {
  return static_cast<std::size_t>(
      std::count_if(gates_.begin(), gates_.end(), [](const Gate& g) { return !is_leaf(g.op); }));
}

std::optional<GateId> Circuit::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Circuit::variables() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const Gate& g : gates_)
    if (g.op == Op::Input && seen.insert(g.variable).second) out.push_back(g.variable);
  return out;
}

const std::vector<int>& Circuit::levels() const {
  if (!levels_) throw PreconditionError("circuit is not leveled");
  return *levels_;
}

std::vector<std::vector<GateId>> Circuit::level_sets() const {
  const auto& lv = levels();
  int top = 0;
  for (int l : lv) top = std::max(top, l);
  std::vector<std::vector<GateId>> sets(gates_.empty() ? 0 : top + 1);
  for (std::size_t i = 0; i < lv.size(); ++i) sets[lv[i]].push_back(static_cast<GateId>(i + 1));
  return sets;
}

std::vector<std::size_t> Circuit::fanout() const {
  std::vector<std::size_t> out(gates_.size(), 0);
  for (const Gate& g : gates_)
    for (GateId in : g.inputs()) ++out[in - 1];
  return out;
}

std::vector<std::vector<GateId>> Circuit::consumers() const {
  std::vector<std::vector<GateId>> out(gates_.size());
  for (std::size_t i = 0; i < gates_.size(); ++i)
    for (GateId in : gates_[i].inputs()) out[in - 1].push_back(static_cast<GateId>(i + 1));
  return out;
}

std::vector<bool> Circuit::output_cone() const {
  std::vector<bool> live(gates_.size(), false);
  if (output_ == kNoGate) return live;
  live[output_ - 1] = true;
  for (std::size_t i = gates_.size(); i-- > 0;) {
    if (!live[i]) continue;
    for (GateId in : gates_[i].inputs()) live[in - 1] = true;
  }
  return live;
}

bool Circuit::is_formula() const {
  auto fo = fanout();
  for (std::size_t i = 0; i < fo.size(); ++i) {
    if (i + 1 == output_) {
      if (fo[i] != 0) return false;
    } else if (fo[i] != 1) {
      return false;
    }
  }
  return true;
}

void Circuit::validate() const {
  if (gates_.empty()) throw PreconditionError("circuit has no gates");
  if (output_ == kNoGate || output_ > gates_.size()) throw PreconditionError("missing output gate");
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    const Gate& g = gates_[i];
    if (!op_allowed(kind_, g.op))
      throw PreconditionError("gate " + g.name + ": label " + std::string(op_name(g.op)) +
                              " not allowed in this circuit kind");
    if (!arity_allowed(g.op, g.arity()))
      throw PreconditionError("gate " + g.name + ": fan-in " + std::to_string(g.arity()) +
                              " invalid for " + std::string(op_name(g.op)));
    for (GateId in : g.inputs())
      if (in == kNoGate || in > i)
        throw PreconditionError("gate " + g.name + ": inputs violate topological order");
    if (kind_ == CircuitKind::Boolean && g.op == Op::Const && g.value != 0 && g.value != 1)
      throw PreconditionError("gate " + g.name + ": boolean constant must be 0 or 1");
  }
}

void Circuit::infer_levels() { levels_ = infer_levels_of(gates_); }

std::optional<std::vector<int>> infer_levels(const Circuit& c) { return infer_levels_of(c.gates()); }

std::string CircuitBuilder::fresh_name(const std::string& wanted) {
  if (!wanted.empty()) {
    if (names_.count(wanted)) throw PreconditionError("duplicate gate name " + wanted);
    return wanted;
  }
  std::string base = "g" + std::to_string(gates_.size() + 1);
  std::string name = base;
  for (int k = 1; names_.count(name); ++k) name = base + "_" + std::to_string(k);
  return name;
}

GateId CircuitBuilder::push(Gate g, const std::string& name) {
  g.name = fresh_name(name);
  names_.insert(g.name);
  gates_.push_back(std::move(g));
  return static_cast<GateId>(gates_.size());
}

GateId CircuitBuilder::input(const std::string& variable, const std::string& name) {
  Gate g;
  g.op = Op::Input;
  g.variable = variable;
  return push(std::move(g), name.empty() && !names_.count(variable) ? variable : name);
}

GateId CircuitBuilder::zvar(const std::string& variable, GateId ref, const std::string& name) {
  Gate g;
  g.op = Op::ZVar;
  g.variable = variable;
  g.ref = ref;
  return push(std::move(g), name);
}

GateId CircuitBuilder::constant(const Int& value, const std::string& name) {
  Gate g;
  g.op = Op::Const;
  g.value = value;
  return push(std::move(g), name);
}

GateId CircuitBuilder::binary(Op op, GateId a, GateId b, const std::string& name) {
  Gate g;
  g.op = op;
  g.in_ = {a, b};
  g.arity_ = 2;
  return push(std::move(g), name);
}

GateId CircuitBuilder::unary(Op op, GateId a, const std::string& name) {
  Gate g;
  g.op = op;
  g.in_ = {a, kNoGate};
  g.arity_ = 1;
  return push(std::move(g), name);
}

GateId CircuitBuilder::copy_gate(const Gate& src, std::span<const GateId> ins, const std::string& name) {
  if (ins.size() != src.arity()) throw PreconditionError("copy_gate: arity mismatch");
  Gate g;
  g.op = src.op;
  g.variable = src.variable;
  g.ref = src.ref;
  g.value = src.value;
  for (std::size_t i = 0; i < ins.size(); ++i) g.in_[i] = ins[i];
  g.arity_ = static_cast<std::uint8_t>(ins.size());
  return push(std::move(g), name);
}

Circuit CircuitBuilder::build(GateId output, std::optional<std::vector<int>> levels) const {
  Circuit c;
  c.kind_ = kind_;
  c.gates_ = gates_;
  c.output_ = output;
  c.validate();
  for (std::size_t i = 0; i < c.gates_.size(); ++i) c.by_name_[c.gates_[i].name] = static_cast<GateId>(i + 1);
  if (levels) {
    if (levels->size() != c.gates_.size()) throw PreconditionError("level vector size mismatch");
    for (std::size_t i = 0; i < c.gates_.size(); ++i)
      for (GateId in : c.gates_[i].inputs())
        if ((*levels)[in - 1] + 1 != (*levels)[i])
          throw PreconditionError("edge into " + c.gates_[i].name + " does not span adjacent levels");
    c.levels_ = std::move(levels);
  } else {
    c.infer_levels();
  }
  return c;
}

}  // namespace twf
