#include "twflat/analysis.hpp"

#include <algorithm>
#include <limits>

#include "twflat/error.hpp"

namespace twf {

Int evaluate(const Circuit& c, const Assignment& a, const FieldSpec& field, bool allow_placeholders) {
  const bool boolean = c.kind() == CircuitKind::Boolean;
  auto cone = c.output_cone();
  std::vector<Int> val(c.size());
  for (GateId id = 1; id <= c.size(); ++id) {
    if (!cone[id - 1]) continue;
    const Gate& g = c.gate(id);
    Int v;
    switch (g.op) {
      case Op::Input: {
        auto it = a.find(g.variable);
        if (it == a.end()) throw PreconditionError("missing value for variable " + g.variable);
        v = it->second;
        if (boolean && v != 0 && v != 1) throw PreconditionError("boolean input " + g.variable + " must be 0 or 1");
        break;
      }
      case Op::ZVar: {
        if (!allow_placeholders) throw PreconditionError("cannot evaluate placeholder " + g.variable);
        auto it = a.find(g.variable);
        if (it == a.end()) throw PreconditionError("missing value for placeholder " + g.variable);
        v = it->second;
        break;
      }
      case Op::Const: v = g.value; break;
      case Op::Add:
        v = val[g.input(0) - 1];
        if (g.arity() == 2) v += val[g.input(1) - 1];
        break;
      case Op::Mul: v = val[g.input(0) - 1] * val[g.input(1) - 1]; break;
      case Op::And: v = (val[g.input(0) - 1] != 0 && val[g.input(1) - 1] != 0) ? 1 : 0; break;
      case Op::Or:
        v = val[g.input(0) - 1];
        if (g.arity() == 2) v = (v != 0 || val[g.input(1) - 1] != 0) ? 1 : 0;
        break;
      case Op::Not: v = val[g.input(0) - 1] == 0 ? 1 : 0; break;
    }
    val[id - 1] = boolean ? v : field.reduce(v);
  }
  return val[c.output() - 1];
}

std::uint64_t formal_degree(const Circuit& c) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> deg(c.size(), 1);
  std::uint64_t best = 0;
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    std::uint64_t d = 1;
    if (!is_leaf(g.op)) {
      auto ins = g.inputs();
      if (g.op == Op::Mul || g.op == Op::And) {
        std::uint64_t x = deg[ins[0] - 1], y = deg[ins[1] - 1];
        d = (x > kMax - y) ? kMax : x + y;
      } else {
        d = 0;
        for (GateId in : ins) d = std::max(d, deg[in - 1]);
      }
    }
    deg[id - 1] = d;
    best = std::max(best, d);
  }
  return best;
}

std::vector<Bitset> ancestor_sets(const Circuit& c) {
  const std::size_t n = c.size();
  std::vector<Bitset> anc(n, Bitset(n + 1));
  for (GateId id = 1; id <= n; ++id) {
    anc[id - 1].set(id);
    for (GateId in : c.gate(id).inputs()) anc[id - 1] |= anc[in - 1];
  }
  return anc;
}

std::size_t mult_chain_length(const Circuit& c) {
  auto anc = ancestor_sets(c);
  std::vector<std::size_t> chain(c.size() + 1, 0);
  std::size_t best = 0;
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    if (g.op != Op::Mul) continue;
    Bitset common = anc[g.input(0) - 1] & anc[g.input(1) - 1];
    if (common.none()) continue;
    std::size_t len = 1;
    for (auto h = common.find_first(); h != Bitset::npos; h = common.find_next(h))
      if (chain[h] > 0) len = std::max(len, chain[h] + 1);
    chain[id] = len;
    best = std::max(best, len);
  }
  return best;
}

bool is_multiplicatively_disjoint(const Circuit& c) { return mult_chain_length(c) == 0; }

bool is_syntactically_multilinear(const Circuit& c) {
  std::map<std::string, std::size_t> index;
  for (const Gate& g : c.gates())
    if (g.op == Op::Input || g.op == Op::ZVar) index.emplace(g.variable, index.size());
  std::vector<Bitset> vars(c.size(), Bitset(index.size()));
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    if (g.op == Op::Input || g.op == Op::ZVar) {
      vars[id - 1].set(index[g.variable]);
      continue;
    }
    for (GateId in : g.inputs()) vars[id - 1] |= vars[in - 1];
    if (g.op == Op::Mul && vars[g.input(0) - 1].intersects(vars[g.input(1) - 1])) return false;
  }
  return true;
}

std::size_t circuit_width(const Circuit& c) {
  std::size_t w = 0;
  for (const auto& level : c.level_sets()) w = std::max(w, level.size());
  return w;
}

std::size_t circuit_depth(const Circuit& c) {
  std::vector<std::size_t> depth(c.size(), 0);
  for (GateId id = 1; id <= c.size(); ++id)
    for (GateId in : c.gate(id).inputs()) depth[id - 1] = std::max(depth[id - 1], depth[in - 1] + 1);
  return depth[c.output() - 1];
}

namespace {

struct ProofTerm {
  Int coef;
  Monomial x_part;
  Monomial z_part;
};

}  // namespace

SparsePolynomial proof_tree_coefficient(const Circuit& c, const std::set<std::string>& zset, std::size_t budget) {
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("proof trees need an arithmetic circuit");
  auto cone = c.output_cone();
  std::vector<std::vector<ProofTerm>> trees(c.size());
  for (GateId id = 1; id <= c.size(); ++id) {
    if (!cone[id - 1]) continue;
    const Gate& g = c.gate(id);
    auto& out = trees[id - 1];
    switch (g.op) {
      case Op::Input: out.push_back({1, Monomial::var(g.variable), {}}); break;
      case Op::ZVar: out.push_back({1, {}, Monomial::var(g.variable)}); break;
      case Op::Const: out.push_back({g.value, {}, {}}); break;
      case Op::Add:
        // One child per tree: a child used twice still yields two trees.
        for (GateId in : g.inputs()) {
          const auto& child = trees[in - 1];
          if (out.size() + child.size() > budget) throw BudgetExceeded("proof tree enumeration budget exceeded");
          out.insert(out.end(), child.begin(), child.end());
        }
        break;
      case Op::Mul: {
        const auto& l = trees[g.input(0) - 1];
        const auto& r = trees[g.input(1) - 1];
        if (!l.empty() && r.size() > budget / l.size()) throw BudgetExceeded("proof tree enumeration budget exceeded");
        out.reserve(l.size() * r.size());
        for (const auto& a : l)
          for (const auto& b : r) out.push_back({a.coef * b.coef, a.x_part * b.x_part, a.z_part * b.z_part});
        break;
      }
      default: throw PreconditionError("proof trees need an arithmetic circuit");
    }
  }
  const Monomial target = Monomial::of(zset);
  SparsePolynomial result;
  for (const auto& t : trees[c.output() - 1])
    if (t.z_part == target) result.add_term(t.x_part, t.coef);
  return result;
}

}  // namespace twf
