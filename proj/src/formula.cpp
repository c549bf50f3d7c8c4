#include "twflat/formula.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "twflat/error.hpp"

namespace twf {

namespace {

constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kSat - b ? kSat : a + b; }

using NodePtr = const Formula::Node*;

// Unique nodes, children before parents.
std::vector<Formula> postorder(const Formula& root) {
  std::vector<Formula> out;
  std::unordered_set<NodePtr> done;
  std::vector<std::pair<Formula, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [f, expanded] = stack.back();
    stack.pop_back();
    if (done.count(f.id())) continue;
    if (expanded) {
      done.insert(f.id());
      out.push_back(f);
      continue;
    }
    stack.push_back({f, true});
    for (std::size_t i = f.arity(); i-- > 0;)
      if (!done.count(f.child(i).id())) stack.push_back({f.child(i), false});
  }
  return out;
}

}  // namespace

Formula Formula::variable(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Input;
  n->variable = name;
  return Formula(n);
}

Formula Formula::zvar(const std::string& name, GateId ref) {
  auto n = std::make_shared<Node>();
  n->op = Op::ZVar;
  n->variable = name;
  n->ref = ref;
  return Formula(n);
}

Formula Formula::constant(const Int& v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return Formula(n);
}

Formula Formula::make(Op op, const Formula& a, const Formula& b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->kids = {a.node_, b.node_};
  n->arity = 2;
  n->tree_size = sat_add(sat_add(a.tree_size(), b.tree_size()), 1);
  n->depth = std::max(a.depth(), b.depth()) + 1;
  return Formula(n);
}

Formula Formula::make(Op op, const Formula& a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->kids = {a.node_, nullptr};
  n->arity = 1;
  n->tree_size = sat_add(a.tree_size(), 1);
  n->depth = a.depth() + 1;
  return Formula(n);
}

Formula Algebra::constant(const Int& v) const {
  if (boolean_) return Formula::constant(v != 0 ? 1 : 0);
  return Formula::constant(field_.reduce(v));
}

Formula Algebra::add(const Formula& a, const Formula& b) const {
  if (a.is_const() && b.is_const()) return constant(a.value() + b.value());
  if (a.is_const(0)) return b;
  if (b.is_const(0)) return a;
  return Formula::make(Op::Add, a, b);
}

Formula Algebra::mul(const Formula& a, const Formula& b) const {
  if (a.is_const() && b.is_const()) return constant(a.value() * b.value());
  if (a.is_const(0) || b.is_const(0)) return constant(0);
  if (a.is_const(1)) return b;
  if (b.is_const(1)) return a;
  return Formula::make(Op::Mul, a, b);
}

Formula Algebra::neg(const Formula& a) const { return mul(constant(-1), a); }

Formula Algebra::sub(const Formula& a, const Formula& b) const { return add(a, neg(b)); }

Formula Algebra::land(const Formula& a, const Formula& b) const {
  if (a.is_const(0) || b.is_const(0)) return constant(0);
  if (a.is_const(1)) return b;
  if (b.is_const(1)) return a;
  return Formula::make(Op::And, a, b);
}

Formula Algebra::lor(const Formula& a, const Formula& b) const {
  if (a.is_const(1) || b.is_const(1)) return constant(1);
  if (a.is_const(0)) return b;
  if (b.is_const(0)) return a;
  return Formula::make(Op::Or, a, b);
}

Formula Algebra::lnot(const Formula& a) const {
  if (a.is_const()) return constant(a.value() == 0 ? 1 : 0);
  if (a.op() == Op::Not) return a.child(0);
  return Formula::make(Op::Not, a);
}

namespace {

template <class F>
Formula fold_balanced(std::vector<Formula> xs, const F& op) {
  while (xs.size() > 1) {
    std::vector<Formula> next;
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) next.push_back(op(xs[i], xs[i + 1]));
    if (xs.size() % 2) next.push_back(xs.back());
    xs = std::move(next);
  }
  return xs[0];
}

}  // namespace

Formula Algebra::sum(std::vector<Formula> xs) const {
  if (xs.empty()) return constant(0);
  return fold_balanced(std::move(xs), [this](const Formula& a, const Formula& b) { return add(a, b); });
}

Formula Algebra::product(std::vector<Formula> xs) const {
  if (xs.empty()) return constant(1);
  return fold_balanced(std::move(xs), [this](const Formula& a, const Formula& b) { return mul(a, b); });
}

Formula Algebra::apply(Op op, const std::vector<Formula>& kids) const {
  switch (op) {
    case Op::Add:
      return kids.size() == 1 ? kids[0] : add(kids[0], kids[1]);
    case Op::Mul:
      return mul(kids[0], kids[1]);
    case Op::And:
      return land(kids[0], kids[1]);
    case Op::Or:
      return kids.size() == 1 ? kids[0] : lor(kids[0], kids[1]);
    case Op::Not:
      return lnot(kids[0]);
    default:
      throw Error("apply: not an operator");
  }
}

Formula from_circuit(const Circuit& c) {
  std::vector<Formula> f(c.size() + 1);
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    switch (g.op) {
      case Op::Input:
        f[id] = Formula::variable(g.variable);
        break;
      case Op::ZVar:
        f[id] = Formula::zvar(g.variable, g.ref);
        break;
      case Op::Const:
        f[id] = Formula::constant(g.value);
        break;
      default:
        if (g.is_pass_through()) f[id] = f[g.input(0)];
        else if (g.arity() == 1) f[id] = Formula::make(g.op, f[g.input(0)]);
        else f[id] = Formula::make(g.op, f[g.input(0)], f[g.input(1)]);
    }
  }
  return f[c.output()];
}

Circuit to_circuit(const Formula& f, CircuitKind kind, std::uint64_t max_size) {
  if (f.tree_size() > max_size)
    throw BudgetExceeded("formula has " + (f.tree_size() == kSat ? std::string("> 2^64") : std::to_string(f.tree_size())) +
                         " gates, above the limit of " + std::to_string(max_size));
  CircuitBuilder b(kind);
  struct Frame {
    Formula f;
    std::size_t next = 0;
    std::array<GateId, 2> ids{};
  };
  std::vector<Frame> stack{{f}};
  GateId last = kNoGate;
  while (!stack.empty()) {
    Frame& fr = stack.back();
    if (fr.next < fr.f.arity()) {
      Formula c = fr.f.child(fr.next);
      stack.push_back({c});
      continue;
    }
    GateId id;
    switch (fr.f.op()) {
      case Op::Input:
        id = b.input(fr.f.var());
        break;
      case Op::ZVar:
        id = b.zvar(fr.f.var(), fr.f.ref());
        break;
      case Op::Const:
        id = b.constant(fr.f.value());
        break;
      default:
        id = fr.f.arity() == 1 ? b.unary(fr.f.op(), fr.ids[0]) : b.binary(fr.f.op(), fr.ids[0], fr.ids[1]);
    }
    stack.pop_back();
    last = id;
    if (!stack.empty()) {
      Frame& parent = stack.back();
      parent.ids[parent.next++] = id;
    }
  }
  return b.build(last);
}

SparsePolynomial expand(const Formula& f, const FieldSpec& field, std::size_t term_budget) {
  auto mod = field.modulus();
  std::unordered_map<NodePtr, SparsePolynomial> val;
  for (const Formula& n : postorder(f)) {
    SparsePolynomial p(mod);
    switch (n.op()) {
      case Op::Input:
      case Op::ZVar:
        p = SparsePolynomial::variable(n.var(), mod);
        break;
      case Op::Const:
        p = SparsePolynomial::constant(n.value(), mod);
        break;
      case Op::Add:
        p = n.arity() == 1 ? val.at(n.child(0).id()) : val.at(n.child(0).id()) + val.at(n.child(1).id());
        break;
      case Op::Mul:
        p = val.at(n.child(0).id()) * val.at(n.child(1).id());
        break;
      default:
        throw PreconditionError("expand: boolean formula");
    }
    if (p.term_count() > term_budget)
      throw BudgetExceeded("expansion exceeds " + std::to_string(term_budget) + " terms");
    val.emplace(n.id(), std::move(p));
  }
  return val.at(f.id());
}

Int evaluate(const Formula& f, const Assignment& a, const FieldSpec& field, bool boolean) {
  std::unordered_map<NodePtr, Int> val;
  auto read = [&](const std::string& v) {
    auto it = a.find(v);
    if (it == a.end()) throw PreconditionError("no value for variable " + v);
    return boolean ? Int(it->second != 0 ? 1 : 0) : field.reduce(it->second);
  };
  for (const Formula& n : postorder(f)) {
    Int v;
    auto kid = [&](std::size_t i) -> const Int& { return val.at(n.child(i).id()); };
    switch (n.op()) {
      case Op::Input:
      case Op::ZVar:
        v = read(n.var());
        break;
      case Op::Const:
        v = boolean ? Int(n.value() != 0 ? 1 : 0) : field.reduce(n.value());
        break;
      case Op::Add:
        v = n.arity() == 1 ? kid(0) : field.reduce(kid(0) + kid(1));
        break;
      case Op::Mul:
        v = field.reduce(kid(0) * kid(1));
        break;
      case Op::And:
        v = (kid(0) != 0 && kid(1) != 0) ? 1 : 0;
        break;
      case Op::Or:
        v = n.arity() == 1 ? kid(0) : Int((kid(0) != 0 || kid(1) != 0) ? 1 : 0);
        break;
      case Op::Not:
        v = kid(0) == 0 ? 1 : 0;
        break;
    }
    val.emplace(n.id(), std::move(v));
  }
  return val.at(f.id());
}

Formula replace_leaves(const Formula& f, const std::function<std::optional<Formula>(const Formula&)>& fn,
                       const Algebra& alg) {
  std::unordered_map<NodePtr, Formula> out;
  for (const Formula& n : postorder(f)) {
    if (n.arity() == 0) {
      auto r = fn(n);
      out.emplace(n.id(), r ? *r : n);
      continue;
    }
    std::vector<Formula> kids;
    bool same = true;
    for (std::size_t i = 0; i < n.arity(); ++i) {
      kids.push_back(out.at(n.child(i).id()));
      same = same && kids.back().id() == n.child(i).id();
    }
    out.emplace(n.id(), same ? n : alg.apply(n.op(), kids));
  }
  return out.at(f.id());
}

Formula substitute_z(const Formula& f, const std::map<GateId, Formula>& subs, const Algebra& alg) {
  return replace_leaves(
      f,
      [&](const Formula& leaf) -> std::optional<Formula> {
        if (leaf.op() != Op::ZVar) return std::nullopt;
        auto it = subs.find(leaf.ref());
        if (it == subs.end()) return std::nullopt;
        return it->second;
      },
      alg);
}

std::set<GateId> zvars_of(const Formula& f) {
  std::set<GateId> out;
  for (const Formula& n : postorder(f))
    if (n.op() == Op::ZVar) out.insert(n.ref());
  return out;
}

std::set<std::string> vars_of(const Formula& f) {
  std::set<std::string> out;
  for (const Formula& n : postorder(f))
    if (n.op() == Op::Input) out.insert(n.var());
  return out;
}

std::map<GateId, std::uint64_t> z_occurrences(const Formula& f) {
  std::unordered_map<NodePtr, std::map<GateId, std::uint64_t>> occ;
  for (const Formula& n : postorder(f)) {
    std::map<GateId, std::uint64_t> m;
    if (n.op() == Op::ZVar) m[n.ref()] = 1;
    for (std::size_t i = 0; i < n.arity(); ++i)
      for (auto [z, c] : occ.at(n.child(i).id())) m[z] = sat_add(m[z], c);
    occ.emplace(n.id(), std::move(m));
  }
  return occ.at(f.id());
}

bool is_syntactically_multilinear(const Formula& f) {
  std::unordered_map<NodePtr, std::set<std::string>> vars;
  for (const Formula& n : postorder(f)) {
    std::set<std::string> s;
    if (n.op() == Op::Input) s.insert("x:" + n.var());
    if (n.op() == Op::ZVar) s.insert("z:" + n.var());
    if (n.arity() == 2 && (n.op() == Op::Mul || n.op() == Op::And)) {
      const auto& a = vars.at(n.child(0).id());
      const auto& b = vars.at(n.child(1).id());
      for (const auto& v : a)
        if (b.count(v)) return false;
    }
    for (std::size_t i = 0; i < n.arity(); ++i) {
      const auto& k = vars.at(n.child(i).id());
      s.insert(k.begin(), k.end());
    }
    vars.emplace(n.id(), std::move(s));
  }
  return true;
}

}  // namespace twf
