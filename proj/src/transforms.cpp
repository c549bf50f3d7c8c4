#include "twflat/transforms.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <set>

#include "mutable_circuit.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"

namespace twf {

using detail::MGate;
using detail::MutableCircuit;

namespace {

void require_valid(const Circuit& c, const TreeDecomposition& td, const char* who) {
  auto rep = validate_td(graph_of(c), td);
  if (!rep.ok()) throw PreconditionError(std::string(who) + ": invalid decomposition: " + rep.violations[0].message);
}

// Bags as ordered sets plus the reverse index vertex -> nodes.
struct BagSets {
  std::vector<std::set<Vertex>> bags;
  std::map<Vertex, std::set<NodeId>> where;

  explicit BagSets(const TreeDecomposition& td) {
    for (NodeId t = 0; t < td.node_count(); ++t) {
      bags.emplace_back(td.bag(t).begin(), td.bag(t).end());
      for (Vertex v : td.bag(t)) where[v].insert(t);
    }
  }
  void add(NodeId t, Vertex v) {
    bags[t].insert(v);
    where[v].insert(t);
  }
  void add_alongside(Vertex v, Vertex anchor) {
    auto nodes = where[anchor];
    for (NodeId t : nodes) add(t, v);
  }
  void remove(Vertex v) {
    for (NodeId t : where[v]) bags[t].erase(v);
    where.erase(v);
  }
  bool contains(NodeId t, Vertex v) const { return bags[t].count(v) != 0; }
  std::vector<std::vector<Vertex>> vectors() const {
    std::vector<std::vector<Vertex>> out;
    for (const auto& b : bags) out.emplace_back(b.begin(), b.end());
    return out;
  }
};

}  // namespace

bool check_preprocessed(const Circuit& c, const TreeDecomposition& td) {
  if (td.node_count() == 0) return c.size() == 0;
  auto below = below_masks(td);
  auto in_below = [&](NodeId t, Vertex v) { return v < below[t].size() && below[t][v]; };
  for (NodeId t = 0; t < td.node_count(); ++t)
    for (Vertex g : td.bag(t)) {
      if (g < 1 || g > c.size()) continue;
      const Gate& gate = c.gate(g);
      if (gate.arity() != 2) continue;
      GateId a = gate.input(0), b = gate.input(1);
      bool ia = td.contains(t, a), ib = td.contains(t, b);
      if (ia != ib) return false;
      if (!ia && in_below(t, a) != in_below(t, b)) return false;
    }
  return true;
}

namespace {

std::set<NodeId> meet(const std::set<NodeId>& a, const std::set<NodeId>& b) {
  std::set<NodeId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

// Tree path between u and v, both ends included.
std::vector<NodeId> tree_path(const TreeDecomposition& td, const std::vector<std::size_t>& depth, NodeId u, NodeId v) {
  std::vector<NodeId> up, down;
  while (u != v) {
    if (depth[u] >= depth[v]) {
      up.push_back(u);
      u = td.parent(u);
    } else {
      down.push_back(v);
      v = td.parent(v);
    }
  }
  up.push_back(u);
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

}  // namespace

PreprocessedPair preprocess(const Circuit& c, const TreeDecomposition& td) {
  require_valid(c, td, "preprocess");
  MutableCircuit mc(c);
  BagSets bs(td);
  std::vector<std::size_t> depth(td.node_count(), 0);
  for (NodeId t : td.preorder())
    if (t != td.root()) depth[t] = depth[td.parent(t)] + 1;
  std::map<GateId, GateId> zero_of;
  // b joins the bags it must share with a and g2, plus the tree path that
  // keeps its bags connected; all of them hold g2.
  auto place_zero = [&](GateId b, const std::set<NodeId>& need) {
    auto have = bs.where[b];
    for (NodeId t : need) {
      if (!have.empty())
        for (NodeId u : tree_path(td, depth, *have.begin(), t)) bs.add(u, b);
      bs.add(t, b);
      have = bs.where[b];
    }
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeId t = 0; t < bs.bags.size(); ++t) {
      std::vector<Vertex> bag(bs.bags[t].begin(), bs.bags[t].end());
      for (Vertex g : bag) {
        if (mc.at(g).in.size() != 2) continue;
        for (std::size_t slot = 0; slot < 2; ++slot) {
          GateId g1 = mc.at(g).in[1 - slot], g2 = mc.at(g).in[slot];
          if (!bs.contains(t, g1) || bs.contains(t, g2)) continue;
          GateId b;
          if (auto it = zero_of.find(g2); it != zero_of.end()) {
            b = it->second;
          } else {
            MGate zero;
            zero.op = Op::Const;
            zero.value = 0;
            b = mc.add(zero);
            zero_of[g2] = b;
          }
          MGate a;
          a.op = mc.kind() == CircuitKind::Boolean ? Op::Or : Op::Add;
          a.in = {b, g2};
          GateId aid = mc.add(a);
          // a follows g1 within g's bags when some bag holds all three, so
          // g sees both inputs in or both out and needs no second rerouting.
          std::set<NodeId> with_g1 = meet(bs.where[g], bs.where[g1]);
          std::set<NodeId> a_nodes =
              meet(with_g1, bs.where[g2]).empty() ? bs.where[g] : with_g1;
          for (NodeId u : a_nodes) bs.add(u, aid);
          place_zero(b, meet(a_nodes, bs.where[g2]));
          mc.at(g).in[slot] = aid;
          changed = true;
        }
      }
    }
  }
  auto fin = mc.finalize(bs.vectors(), td.edges(), td.root());
  PreprocessedPair out{std::move(fin.circuit), std::move(fin.td), {}};
  for (GateId pid : fin.pool_id) out.provenance.push_back(pid <= c.size() ? pid : kNoGate);
  return out;
}

CircuitTd arithmetize(const Circuit& c, const TreeDecomposition& td) {
  if (c.kind() != CircuitKind::Boolean) throw PreconditionError("arithmetize: circuit is not boolean");
  require_valid(c, td, "arithmetize");
  MutableCircuit mc(CircuitKind::Arithmetic);
  for (const Gate& g : c.gates()) {
    MGate m;
    m.op = g.op;
    m.name = g.name;
    m.variable = g.variable;
    m.value = g.value;
    m.in.assign(g.inputs().begin(), g.inputs().end());
    mc.add(std::move(m));
  }
  mc.output = c.output();
  BagSets bs(td);
  std::vector<GateId> redirect(c.size() + 1, kNoGate);
  std::set<GateId> outer;
  for (GateId id = 1; id <= c.size(); ++id) {
    MGate& g = mc.at(id);
    switch (g.op) {
      case Op::And:
        g.op = Op::Mul;
        break;
      case Op::Not: {
        MGate one;
        one.op = Op::Const;
        one.value = 1;
        GateId oid = mc.add(one);
        MGate& ng = mc.at(id);
        ng.op = Op::Add;
        ng.in = {oid, ng.in[0]};
        bs.add(*bs.where[id].begin(), oid);
        break;
      }
      case Op::Or: {
        g.op = Op::Add;
        if (g.in.size() == 1) break;
        std::vector<GateId> ins = g.in;
        MGate prod;
        prod.op = Op::Mul;
        prod.in = ins;
        GateId cid = mc.add(prod);
        MGate sum;
        sum.op = Op::Add;
        sum.in = {id, cid};
        GateId bid = mc.add(sum);
        bs.add_alongside(cid, id);
        bs.add_alongside(bid, id);
        redirect[id] = bid;
        outer.insert(bid);
        break;
      }
      default:
        break;
    }
  }
  for (GateId id = 1; id <= mc.size(); ++id) {
    if (outer.count(id)) continue;
    for (GateId& in : mc.at(id).in)
      if (in <= c.size() && redirect[in] != kNoGate) in = redirect[in];
  }
  if (redirect[mc.output] != kNoGate) mc.output = redirect[mc.output];
  auto fin = mc.finalize(bs.vectors(), td.edges(), td.root());
  return {std::move(fin.circuit), std::move(fin.td)};
}

Formula dearithmetize(const Formula& f) {
  const Algebra alg = Algebra::boolean();
  std::map<const Formula::Node*, Formula> memo;
  std::function<Formula(const Formula&)> go = [&](const Formula& n) -> Formula {
    if (auto it = memo.find(n.id()); it != memo.end()) return it->second;
    Formula r;
    switch (n.op()) {
      case Op::Input:
        r = n;
        break;
      case Op::Const:
        if (n.value() != 0 && n.value() != 1) throw PreconditionError("dearithmetize: constant outside {0,1}");
        r = alg.constant(n.value());
        break;
      case Op::Mul:
        r = alg.land(go(n.child(0)), go(n.child(1)));
        break;
      case Op::Add: {
        if (n.arity() == 1) {
          r = go(n.child(0));
          break;
        }
        Formula a = go(n.child(0)), b = go(n.child(1));
        r = alg.lor(alg.land(a, alg.lnot(b)), alg.land(alg.lnot(a), b));
        break;
      }
      default:
        throw PreconditionError("dearithmetize: unsupported gate " + std::string(op_name(n.op())));
    }
    memo.emplace(n.id(), r);
    return r;
  };
  return go(f);
}

Circuit dearithmetize(const Circuit& formula) {
  if (formula.kind() != CircuitKind::Arithmetic) throw PreconditionError("dearithmetize: circuit is not arithmetic");
  if (!formula.is_formula()) throw PreconditionError("dearithmetize: input is not a formula");
  return to_circuit(dearithmetize(from_circuit(formula)), CircuitKind::Boolean, 50'000'000);
}

CircuitTd sm_normalize(const Circuit& c, const TreeDecomposition& td) {
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("sm_normalize: circuit is not arithmetic");
  if (!is_syntactically_multilinear(c)) throw PreconditionError("sm_normalize: circuit is not syntactically multilinear");
  require_valid(c, td, "sm_normalize");
  MutableCircuit mc(c);
  std::vector<bool> varfree(c.size() + 1, false);
  std::vector<Int> value(c.size() + 1);
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    if (g.op == Op::Const) {
      varfree[id] = true;
      value[id] = g.value;
      continue;
    }
    if (is_leaf(g.op)) continue;
    bool vf = true;
    for (GateId in : g.inputs()) vf = vf && varfree[in];
    if (!vf) continue;
    varfree[id] = true;
    if (g.is_pass_through()) value[id] = value[g.input(0)];
    else if (g.op == Op::Add) value[id] = value[g.input(0)] + value[g.input(1)];
    else value[id] = value[g.input(0)] * value[g.input(1)];
    MGate& m = mc.at(id);
    m.op = Op::Const;
    m.value = value[id];
    m.in.clear();
  }
  BagSets bs(td);
  auto live = mc.live_mask();
  for (GateId id = 1; id <= c.size(); ++id)
    if (!live[id]) {
      mc.at(id).alive = false;
      bs.remove(id);
    }
  // Split shared constants: one fresh copy per use, each in its own leaf bag.
  std::vector<std::vector<std::pair<GateId, std::size_t>>> uses(c.size() + 1);
  for (GateId id = 1; id <= c.size(); ++id) {
    if (!mc.at(id).alive) continue;
    for (std::size_t s = 0; s < mc.at(id).in.size(); ++s) uses[mc.at(id).in[s]].push_back({id, s});
  }
  auto edges = td.edges();
  for (GateId id = 1; id <= c.size(); ++id) {
    if (!mc.at(id).alive || mc.at(id).op != Op::Const || uses[id].size() < 2) continue;
    for (auto [consumer, slot] : uses[id]) {
      MGate copy;
      copy.op = Op::Const;
      copy.value = mc.at(id).value;
      GateId cid = mc.add(copy);
      mc.at(consumer).in[slot] = cid;
      NodeId anchor = *bs.where.at(consumer).begin();
      bs.bags.push_back({consumer, cid});
      NodeId leaf = static_cast<NodeId>(bs.bags.size() - 1);
      bs.where[consumer].insert(leaf);
      bs.where[cid].insert(leaf);
      edges.push_back({anchor, leaf});
    }
    mc.at(id).alive = false;
    bs.remove(id);
  }
  auto fin = mc.finalize(bs.vectors(), edges, td.root());
  return {std::move(fin.circuit), std::move(fin.td)};
}

}  // namespace twf
