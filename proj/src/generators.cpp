#include "twflat/generators.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "mutable_circuit.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"

namespace twf {

using detail::MGate;
using detail::MutableCircuit;

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
bool coin(Rng& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

// Random rooted tree on n nodes, at most `max_children` children each;
// parent[0] = none. Nodes are numbered so parents precede children.
std::vector<std::size_t> random_tree(Rng& rng, std::size_t n, std::size_t max_children) {
  std::vector<std::size_t> parent(n, 0), kids(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t p;
    do p = pick(rng, i);
    while (kids[p] >= max_children);
    parent[i] = p;
    ++kids[p];
  }
  return parent;
}

}  // namespace

CircuitTd random_circuit_td(const GenOptions& opt) {
  if (opt.gates == 0) throw PreconditionError("gen: need at least one gate");
  if (opt.k == 0 && opt.gates > 1) throw PreconditionError("gen: k must be at least 1");
  Rng rng(opt.seed);
  const std::size_t cap = opt.k + 1;
  const std::size_t nodes = std::max<std::size_t>(1, opt.gates / std::max<std::size_t>(1, (cap + 1) / 2));
  auto parent = random_tree(rng, nodes, 2);
  std::vector<std::vector<std::size_t>> children(nodes);
  for (std::size_t i = 1; i < nodes; ++i) children[parent[i]].push_back(i);

  MutableCircuit mc(opt.boolean ? CircuitKind::Boolean : CircuitKind::Arithmetic);
  std::vector<std::vector<Vertex>> bags(nodes);
  std::vector<Bitset> anc{Bitset()};           // per gate: reflexive ancestors
  std::vector<std::set<std::string>> vars{{}};  // per gate: variables in its cone
  std::vector<std::size_t> uses{0};
  std::size_t made = 0, fresh_var = 0;
  GateId last = kNoGate;

  auto grow = [](Bitset& b, std::size_t n) {
    if (b.size() < n) b.resize(n);
  };
  auto new_gate = [&](MGate g) {
    GateId id = mc.add(std::move(g));
    const MGate& m = mc.at(id);
    Bitset a(id + 1);
    a.set(id);
    std::set<std::string> v;
    if (m.op == Op::Input) v.insert(m.variable);
    for (GateId in : m.in) {
      Bitset x = anc[in];
      grow(x, id + 1);
      a |= x;
      v.insert(vars[in].begin(), vars[in].end());
      ++uses[in];
    }
    anc.push_back(a);
    vars.push_back(std::move(v));
    uses.push_back(0);
    ++made;
    return id;
  };
  auto leaf = [&]() {
    MGate g;
    if (coin(rng, 0.85)) {
      g.op = Op::Input;
      if (opt.sm) {
        if (fresh_var < opt.max_vars) {
          g.variable = "x" + std::to_string(++fresh_var);
        } else {
          g.op = Op::Const;
          g.value = opt.boolean ? Int(pick(rng, 2)) : Int(pick(rng, 5)) - 2;
        }
      } else {
        g.variable = "x" + std::to_string(1 + pick(rng, std::max<std::size_t>(1, opt.max_vars)));
      }
    } else {
      g.op = Op::Const;
      g.value = opt.boolean ? Int(pick(rng, 2)) : Int(pick(rng, 5)) - 2;
    }
    return new_gate(g);
  };
  auto choose_input = [&](const std::vector<Vertex>& bag) {
    std::vector<Vertex> unused;
    for (Vertex v : bag)
      if (uses[v] == 0) unused.push_back(v);
    if (!unused.empty() && coin(rng, 0.7)) return unused[pick(rng, unused.size())];
    return bag[pick(rng, bag.size())];
  };
  auto shares = [&](GateId a, GateId b) {
    if (opt.md) {
      Bitset x = anc[a], y = anc[b];
      std::size_t n = std::max(x.size(), y.size());
      grow(x, n);
      grow(y, n);
      if (x.intersects(y)) return true;
    }
    if (opt.sm)
      for (const auto& v : vars[a])
        if (vars[b].count(v)) return true;
    return false;
  };
  auto op_gate = [&](const std::vector<Vertex>& bag) {
    MGate g;
    if (opt.boolean && coin(rng, 0.2)) {
      g.op = Op::Not;
      g.in = {choose_input(bag)};
      return new_gate(g);
    }
    GateId a = choose_input(bag), b = choose_input(bag);
    if (a == b && bag.size() > 1)
      for (int tries = 0; tries < 4 && a == b; ++tries) b = choose_input(bag);
    bool mul = coin(rng, 0.5);
    if (mul && shares(a, b)) mul = false;
    if (opt.boolean) g.op = mul ? Op::And : Op::Or;
    else g.op = mul ? Op::Mul : Op::Add;
    g.in = {a, b};
    return new_gate(g);
  };

  // Post-order: children before parents.
  std::vector<std::size_t> order;
  {
    std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
    while (!stack.empty()) {
      auto [t, done] = stack.back();
      stack.pop_back();
      if (done) {
        order.push_back(t);
        continue;
      }
      stack.push_back({t, true});
      for (std::size_t c : children[t]) stack.push_back({c, false});
    }
  }
  std::vector<std::vector<Vertex>> exported(nodes);
  auto unused_of = [&](const std::vector<Vertex>& bag) {
    std::vector<Vertex> out;
    for (Vertex v : bag)
      if (uses[v] == 0) out.push_back(v);
    return out;
  };
  // Two fresh ends merged into one keeps the circuit from falling apart.
  auto merge_unused = [&](const std::vector<Vertex>& bag) {
    auto u = unused_of(bag);
    std::shuffle(u.begin(), u.end(), rng);
    MGate g;
    GateId a = u[0], b = u[1];
    bool mul = coin(rng, 0.5) && !shares(a, b);
    if (opt.boolean) g.op = mul ? Op::And : Op::Or;
    else g.op = mul ? Op::Mul : Op::Add;
    g.in = {a, b};
    return new_gate(g);
  };
  const std::size_t export_limit = std::max<std::size_t>(1, (cap - 1) / 2);
  for (std::size_t t : order) {
    std::vector<Vertex> offered;
    for (std::size_t c : children[t]) offered.insert(offered.end(), exported[c].begin(), exported[c].end());
    std::shuffle(offered.begin(), offered.end(), rng);
    std::stable_partition(offered.begin(), offered.end(), [&](Vertex v) { return uses[v] == 0; });
    std::vector<Vertex> bag;
    for (Vertex v : offered)
      if (bag.size() + 1 < cap) bag.push_back(v);
    auto add = [&](GateId g) {
      bag.push_back(g);
      last = g;
    };
    // One gate stays reserved for the root.
    const std::size_t budget = t == 0 ? opt.gates : opt.gates - 1;
    std::size_t want = 1 + pick(rng, cap - bag.size());
    for (std::size_t i = 0; i < want && made < budget; ++i) {
      std::size_t u = unused_of(bag).size();
      if (u >= 2 && coin(rng, 0.6)) add(merge_unused(bag));
      else if (bag.empty() || (u < 2 && coin(rng, 0.5))) add(leaf());
      else add(op_gate(bag));
    }
    std::size_t limit = t == 0 ? 1 : export_limit;
    while (bag.size() < cap && made < budget && unused_of(bag).size() > limit) add(merge_unused(bag));
    bags[t] = bag;
    if (t != 0) {
      std::vector<Vertex> ex = unused_of(bag);
      if (ex.size() > export_limit) ex.resize(export_limit);
      for (Vertex v : bag)
        if (uses[v] != 0 && coin(rng, 0.3)) ex.push_back(v);
      exported[t] = ex;
    }
  }
  mc.output = last;
  auto live = mc.live_mask();
  for (GateId id = 1; id <= mc.size(); ++id) mc.at(id).alive = live[id];
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 1; i < nodes; ++i) edges.push_back({static_cast<NodeId>(parent[i]), static_cast<NodeId>(i)});
  // random root
  auto fin = mc.finalize(bags, edges, static_cast<NodeId>(pick(rng, nodes)));
  return {std::move(fin.circuit), std::move(fin.td)};
}

Circuit random_leveled(const LeveledOptions& opt) {
  Rng rng(opt.seed);
  MutableCircuit mc(CircuitKind::Arithmetic);
  std::vector<int> levels{0};
  std::vector<std::size_t> uses{0};
  auto add = [&](MGate g, int level) {
    for (GateId in : g.in) ++uses[in];
    GateId id = mc.add(std::move(g));
    levels.push_back(level);
    uses.push_back(0);
    return id;
  };
  std::vector<GateId> prev;
  std::size_t w0 = 1 + pick(rng, opt.width);
  for (std::size_t i = 0; i < w0; ++i) {
    MGate g;
    g.op = Op::Input;
    g.variable = "x" + std::to_string(1 + pick(rng, opt.max_vars));
    prev.push_back(add(g, 0));
  }
  for (std::size_t l = 1; l < std::max<std::size_t>(opt.levels, 2); ++l) {
    bool last = l + 1 == std::max<std::size_t>(opt.levels, 2);
    std::size_t w = last ? 1 : 1 + pick(rng, opt.width);
    std::vector<GateId> cur;
    for (std::size_t i = 0; i < w; ++i) {
      std::vector<GateId> avail;
      for (GateId g : prev)
        if (!opt.fanout2 || uses[g] < 2) avail.push_back(g);
      MGate g;
      if (avail.empty()) {
        // Every gate below is saturated; start a fresh constant chain here.
        g.op = Op::Const;
        g.value = 1 + pick(rng, 3);
        cur.push_back(add(g, static_cast<int>(l)));
        continue;
      }
      // Prefer unused gates so little is pruned.
      std::vector<GateId> unused;
      for (GateId x : avail)
        if (uses[x] == 0) unused.push_back(x);
      auto choose = [&]() {
        const auto& pool = !unused.empty() && coin(rng, 0.7) ? unused : avail;
        return pool[pick(rng, pool.size())];
      };
      GateId a = choose();
      std::vector<GateId> avail2;
      for (GateId x : avail)
        if (!opt.fanout2 || uses[x] + (x == a ? 1 : 0) < 2) avail2.push_back(x);
      GateId b;
      if (avail2.empty()) {
        g.op = Op::Add;
        g.in = {a};
        cur.push_back(add(g, static_cast<int>(l)));
        continue;
      }
      b = avail2[pick(rng, avail2.size())];
      if (!unused.empty() && coin(rng, 0.5)) {
        std::vector<GateId> u2;
        for (GateId x : unused)
          if (x != a && std::find(avail2.begin(), avail2.end(), x) != avail2.end()) u2.push_back(x);
        if (!u2.empty()) b = u2[pick(rng, u2.size())];
      }
      g.op = coin(rng, opt.mul_prob) ? Op::Mul : Op::Add;
      g.in = {a, b};
      cur.push_back(add(g, static_cast<int>(l)));
    }
    prev = std::move(cur);
  }
  mc.output = static_cast<GateId>(mc.size());
  auto live = mc.live_mask();
  for (GateId id = 1; id <= mc.size(); ++id) mc.at(id).alive = live[id];
  return mc.finalize(levels).circuit;
}

GraphTd random_graph_td(std::size_t n, std::size_t k, bool directed, bool deep, double edge_prob, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t cap = k + 1;
  // Each tree node introduces one new vertex and keeps a random subset of
  // its parent's bag, so vertex occurrences stay connected.
  std::vector<std::vector<Vertex>> bags;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::set<std::pair<Vertex, Vertex>> es;
  for (Vertex v = 1; v <= n; ++v) {
    std::vector<Vertex> bag;
    if (!bags.empty()) {
      NodeId p;
      if (deep) p = coin(rng, 0.7) ? static_cast<NodeId>(bags.size() - 1) : static_cast<NodeId>(pick(rng, bags.size()));
      else p = static_cast<NodeId>(pick(rng, bags.size()));
      auto pb = bags[p];
      std::shuffle(pb.begin(), pb.end(), rng);
      std::size_t keep = std::min(pb.size(), cap - 1);
      keep = keep == 0 ? 0 : 1 + pick(rng, keep);
      bag.assign(pb.begin(), pb.begin() + keep);
      edges.push_back({p, static_cast<NodeId>(bags.size())});
    }
    for (Vertex u : bag)
      if (coin(rng, edge_prob)) {
        if (directed && coin(rng, 0.5)) es.insert({v, u});
        else es.insert({u, v});
      }
    bag.push_back(v);
    bags.push_back(std::move(bag));
  }
  GraphTd out;
  out.graph.n = n;
  out.graph.directed = directed;
  out.graph.edges.assign(es.begin(), es.end());
  std::shuffle(out.graph.edges.begin(), out.graph.edges.end(), rng);
  if (n == 0) return out;
  out.td = TreeDecomposition(std::move(bags), edges, 0);
  return out;
}

}  // namespace twf
