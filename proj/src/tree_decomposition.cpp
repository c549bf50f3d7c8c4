#include "twflat/tree_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "twflat/error.hpp"

namespace twf {

Graph graph_of(const Circuit& c) {
  Graph g;
  g.n = c.size();
  g.directed = true;
  for (GateId id = 1; id <= c.size(); ++id)
    for (GateId in : c.gate(id).inputs()) g.edges.push_back({in, id});
  return g;
}

TreeDecomposition::TreeDecomposition(std::vector<std::vector<Vertex>> bags,
                                     const std::vector<std::pair<NodeId, NodeId>>& edges, NodeId root)
    : bags_(std::move(bags)), adj_(bags_.size()), root_(root) {
  const std::size_t n = bags_.size();
  for (auto& b : bags_) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  if (n == 0) {
    if (!edges.empty()) throw PreconditionError("tree edges without nodes");
    root_ = 0;
    return;
  }
  if (root >= n) throw PreconditionError("root out of range");
  if (edges.size() != n - 1) throw PreconditionError("decomposition tree needs exactly #nodes - 1 edges");
  for (auto [a, b] : edges) {
    if (a >= n || b >= n || a == b) throw PreconditionError("bad tree edge");
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& a : adj_) std::sort(a.begin(), a.end());
  parent_.assign(n, kNoNode);
  children_.assign(n, {});
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{root};
  seen[root] = true;
  std::size_t visited = 0;
  while (!stack.empty()) {
    NodeId t = stack.back();
    stack.pop_back();
    ++visited;
    for (NodeId u : adj_[t]) {
      if (seen[u]) continue;
      seen[u] = true;
      parent_[u] = t;
      children_[t].push_back(u);
      stack.push_back(u);
    }
  }
  if (visited != n) throw PreconditionError("decomposition tree is not connected");
  for (auto& ch : children_) std::sort(ch.begin(), ch.end());
}

std::vector<std::pair<NodeId, NodeId>> TreeDecomposition::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId t = 0; t < bags_.size(); ++t)
    if (parent_[t] != kNoNode) out.push_back({parent_[t], t});
  return out;
}

bool TreeDecomposition::contains(NodeId t, Vertex v) const {
  const auto& b = bags_.at(t);
  return std::binary_search(b.begin(), b.end(), v);
}

std::vector<NodeId> TreeDecomposition::preorder() const {
  std::vector<NodeId> order;
  if (bags_.empty()) return order;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId t = stack.back();
    stack.pop_back();
    order.push_back(t);
    for (auto it = children_[t].rbegin(); it != children_[t].rend(); ++it) stack.push_back(*it);
  }
  return order;
}

std::vector<std::size_t> TreeDecomposition::heights() const {
  std::vector<std::size_t> h(bags_.size(), 0);
  auto order = preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (NodeId c : children_[*it]) h[*it] = std::max(h[*it], h[c] + 1);
  return h;
}

std::size_t TreeDecomposition::max_vertex() const {
  Vertex m = 0;
  for (const auto& b : bags_)
    if (!b.empty()) m = std::max(m, b.back());
  return m;
}

TreeDecomposition TreeDecomposition::rerooted(NodeId r) const { return TreeDecomposition(bags_, edges(), r); }

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.message << '\n';
  return os.str();
}

ValidationReport validate_td(const Graph& g, const TreeDecomposition& td) {
  ValidationReport rep;
  std::vector<std::vector<NodeId>> where(g.n + 1);
  for (NodeId t = 0; t < td.node_count(); ++t)
    for (Vertex v : td.bag(t)) {
      if (v < 1 || v > g.n) {
        rep.violations.push_back({Violation::Kind::VertexRange, v, {}, "bag " + std::to_string(t + 1) +
                                                                        " holds unknown vertex " + std::to_string(v)});
        continue;
      }
      where[v].push_back(t);
    }
  for (Vertex v = 1; v <= g.n; ++v)
    if (where[v].empty())
      rep.violations.push_back({Violation::Kind::VertexCoverage, v, {}, "vertex " + std::to_string(v) + " is in no bag"});
  for (auto [u, v] : g.edges) {
    if (u == v || u < 1 || v < 1 || u > g.n || v > g.n) continue;
    bool covered = false;
    for (NodeId t : where[u])
      if (td.contains(t, v)) {
        covered = true;
        break;
      }
    if (!covered)
      rep.violations.push_back({Violation::Kind::EdgeCoverage, 0, {u, v},
                                "edge (" + std::to_string(u) + "," + std::to_string(v) + ") is in no bag"});
  }
  for (Vertex v = 1; v <= g.n; ++v) {
    if (where[v].size() < 2) continue;
    // Connected iff #tree edges inside the node set == #nodes - 1.
    std::size_t inner = 0;
    for (NodeId t : where[v]) {
      NodeId p = td.parent(t);
      if (p != kNoNode && td.contains(p, v)) ++inner;
    }
    if (inner + 1 != where[v].size())
      rep.violations.push_back({Violation::Kind::Connectivity, v, {},
                                "bags holding vertex " + std::to_string(v) + " are not connected"});
  }
  return rep;
}

std::size_t td_width(const TreeDecomposition& td) {
  std::size_t m = 0;
  for (const auto& b : td.bags()) m = std::max(m, b.size());
  return m == 0 ? 0 : m - 1;
}

std::size_t td_depth(const TreeDecomposition& td) {
  if (td.node_count() == 0) return 0;
  return td.heights()[td.root()];
}

std::vector<Vertex> bag_below(const TreeDecomposition& td, NodeId t) {
  std::set<Vertex> acc;
  std::vector<NodeId> stack{t};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    acc.insert(td.bag(u).begin(), td.bag(u).end());
    for (NodeId c : td.children(u)) stack.push_back(c);
  }
  return {acc.begin(), acc.end()};
}

std::vector<std::vector<bool>> below_masks(const TreeDecomposition& td) {
  const std::size_t nv = td.max_vertex() + 1;
  std::vector<std::vector<bool>> mask(td.node_count(), std::vector<bool>(nv, false));
  auto order = td.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId t = *it;
    for (Vertex v : td.bag(t)) mask[t][v] = true;
    for (NodeId c : td.children(t))
      for (std::size_t v = 0; v < nv; ++v)
        if (mask[c][v]) mask[t][v] = true;
  }
  return mask;
}

TreeDecomposition td_from_leveled(const Circuit& c) {
  auto levels = c.level_sets();
  std::vector<std::vector<Vertex>> bags;
  std::vector<std::pair<NodeId, NodeId>> edges;
  if (levels.size() <= 1) {
    bags.push_back(levels.empty() ? std::vector<Vertex>{} : std::vector<Vertex>(levels[0].begin(), levels[0].end()));
    return TreeDecomposition(bags, edges, 0);
  }
  for (std::size_t j = 1; j < levels.size(); ++j) {
    std::vector<Vertex> b(levels[j - 1].begin(), levels[j - 1].end());
    b.insert(b.end(), levels[j].begin(), levels[j].end());
    bags.push_back(std::move(b));
    if (j > 1) edges.push_back({static_cast<NodeId>(j - 2), static_cast<NodeId>(j - 1)});
  }
  return TreeDecomposition(bags, edges, static_cast<NodeId>(bags.size() - 1));
}

std::size_t balanced_depth_bound(std::size_t n) {
  if (n <= 1) return 0;
  double x = std::log(static_cast<double>(n)) / std::log(1.25);
  auto c = static_cast<std::size_t>(std::ceil(x - 1e-12));
  return 2 * c;
}

namespace {

// Merge tree nodes whose bag is contained in a neighbour's; afterwards the
// node count is at most the vertex count.
std::pair<std::vector<std::vector<Vertex>>, std::vector<std::vector<NodeId>>> compress(const TreeDecomposition& td) {
  const std::size_t n = td.node_count();
  std::vector<std::vector<Vertex>> bags = td.bags();
  std::vector<std::set<NodeId>> adj(n);
  for (auto [a, b] : td.edges()) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::vector<bool> alive(n, true);
  auto subset = [](const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeId t = 0; t < n && !changed; ++t) {
      if (!alive[t]) continue;
      for (NodeId u : adj[t]) {
        if (!subset(bags[t], bags[u])) continue;
        // Contract t into u.
        for (NodeId w : adj[t]) {
          if (w == u) continue;
          adj[w].erase(t);
          adj[w].insert(u);
          adj[u].insert(w);
        }
        adj[u].erase(t);
        adj[t].clear();
        alive[t] = false;
        changed = true;
        break;
      }
    }
  }
  std::vector<NodeId> index(n, kNoNode);
  std::vector<std::vector<Vertex>> out_bags;
  for (NodeId t = 0; t < n; ++t)
    if (alive[t]) {
      index[t] = static_cast<NodeId>(out_bags.size());
      out_bags.push_back(bags[t]);
    }
  std::vector<std::vector<NodeId>> out_adj(out_bags.size());
  for (NodeId t = 0; t < n; ++t)
    if (alive[t])
      for (NodeId u : adj[t]) out_adj[index[t]].push_back(index[u]);
  for (auto& a : out_adj) std::sort(a.begin(), a.end());
  return {out_bags, out_adj};
}

class Balancer {
 public:
  Balancer(std::vector<std::vector<Vertex>> bags, std::vector<std::vector<NodeId>> adj, std::size_t nv)
      : bags_(std::move(bags)), adj_(std::move(adj)), total_(nv + 1, 0) {
    for (const auto& b : bags_)
      for (Vertex v : b) ++total_[v];
  }

  TreeDecomposition run() {
    std::vector<NodeId> all(bags_.size());
    std::iota(all.begin(), all.end(), 0);
    NodeId root = build(all);
    return TreeDecomposition(out_bags_, out_edges_, root);
  }

 private:
  using Mask = std::vector<bool>;

  Mask mask_of(const std::vector<NodeId>& s) const {
    Mask m(bags_.size(), false);
    for (NodeId t : s) m[t] = true;
    return m;
  }

  std::vector<Vertex> boundary(const std::vector<NodeId>& s) const {
    std::map<Vertex, std::size_t> cnt;
    for (NodeId t : s)
      for (Vertex v : bags_[t]) ++cnt[v];
    std::vector<Vertex> w;
    for (auto [v, c] : cnt)
      if (c < total_[v]) w.push_back(v);
    return w;
  }

  std::vector<std::vector<NodeId>> components(const std::vector<NodeId>& s, const Mask& in, NodeId removed) const {
    std::vector<std::vector<NodeId>> comps;
    Mask seen(bags_.size(), false);
    for (NodeId s0 : s) {
      if (s0 == removed || seen[s0]) continue;
      std::vector<NodeId> comp{s0};
      seen[s0] = true;
      for (std::size_t q = 0; q < comp.size(); ++q)
        for (NodeId u : adj_[comp[q]])
          if (in[u] && u != removed && !seen[u]) {
            seen[u] = true;
            comp.push_back(u);
          }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  }

  std::size_t crossing(const std::vector<NodeId>& comp, const Mask& scope) const {
    std::size_t c = 0;
    for (NodeId t : comp)
      for (NodeId u : adj_[t])
        if (!scope[u]) ++c;
    return c;
  }

  NodeId emit(std::vector<Vertex> bag) {
    std::sort(bag.begin(), bag.end());
    bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
    out_bags_.push_back(std::move(bag));
    return static_cast<NodeId>(out_bags_.size() - 1);
  }

  void attach(NodeId parent, NodeId child) { out_edges_.push_back({parent, child}); }

  // Split pieces into two groups of similar total size.
  static std::pair<std::vector<NodeId>, std::vector<NodeId>> split(std::vector<std::vector<NodeId>> pieces) {
    std::stable_sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::vector<NodeId> g1, g2;
    for (auto& p : pieces) {
      auto& g = g1.size() <= g2.size() ? g1 : g2;
      g.insert(g.end(), p.begin(), p.end());
    }
    std::sort(g1.begin(), g1.end());
    std::sort(g2.begin(), g2.end());
    return {g1, g2};
  }

  NodeId build(const std::vector<NodeId>& s) {
    const Mask in = mask_of(s);
    const std::vector<Vertex> w = boundary(s);
    auto comps = components(s, in, kNoNode);
    if (comps.size() > 1) {
      NodeId node = emit(w);
      auto [g1, g2] = split(std::move(comps));
      attach(node, build(g1));
      attach(node, build(g2));
      return node;
    }
    // Connected: pick the separator keeping every piece at <= 2 crossing
    // edges, then minimising the largest piece; ties by smallest id.
    NodeId best = kNoNode;
    std::tuple<std::size_t, std::size_t> best_score{};
    for (NodeId c : s) {
      std::size_t excess = 0, largest = 0;
      for (const auto& comp : components(s, in, c)) {
        Mask scope = mask_of(comp);
        excess = std::max(excess, crossing(comp, scope) > 2 ? crossing(comp, scope) - 2 : std::size_t{0});
        largest = std::max(largest, comp.size());
      }
      std::tuple<std::size_t, std::size_t> score{excess, largest};
      if (best == kNoNode || score < best_score) {
        best = c;
        best_score = score;
      }
    }
    std::vector<Vertex> bag = bags_[best];
    bag.insert(bag.end(), w.begin(), w.end());
    NodeId node = emit(std::move(bag));
    auto pieces = components(s, in, best);
    if (pieces.size() == 1) {
      attach(node, build(pieces[0]));
    } else if (pieces.size() >= 2) {
      auto [g1, g2] = split(std::move(pieces));
      attach(node, build(g1));
      attach(node, build(g2));
    }
    return node;
  }

  std::vector<std::vector<Vertex>> bags_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<std::size_t> total_;
  std::vector<std::vector<Vertex>> out_bags_;
  std::vector<std::pair<NodeId, NodeId>> out_edges_;
};

bool is_binary(const TreeDecomposition& td) {
  for (NodeId t = 0; t < td.node_count(); ++t)
    if (td.children(t).size() > 2) return false;
  return true;
}

}  // namespace

TreeDecomposition balance_td(const Graph& g, const TreeDecomposition& td, BalanceOptions options) {
  auto report = validate_td(g, td);
  if (!report.ok()) throw PreconditionError("balance_td: invalid input decomposition: " + report.violations[0].message);
  const std::size_t bound = balanced_depth_bound(g.n);
  if (td.node_count() <= 1) return td;
  if (!options.force && is_binary(td) && td_depth(td) <= bound) return td;

  auto [bags, adj] = compress(td);
  std::size_t nv = std::max<std::size_t>(g.n, td.max_vertex());
  TreeDecomposition out = Balancer(std::move(bags), std::move(adj), nv).run();

  const std::size_t k = td_width(td);
  if (td_width(out) > 3 * k + 2 || td_depth(out) > std::max(bound, td.node_count() <= 1 ? 0 : bound) ||
      !is_binary(out))
    throw Error("balance_td postcondition violated (width " + std::to_string(td_width(out)) + ", depth " +
                std::to_string(td_depth(out)) + ")");
  return out;
}

TreeDecomposition root_with_output(const TreeDecomposition& td, const Circuit& c) {
  const Vertex out = c.output();
  if (td.node_count() == 0) return td;
  // BFS from the root for the nearest bag holding the output.
  std::vector<NodeId> prev(td.node_count(), kNoNode);
  std::vector<NodeId> queue{td.root()};
  std::vector<bool> seen(td.node_count(), false);
  seen[td.root()] = true;
  NodeId found = kNoNode;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    NodeId t = queue[q];
    if (td.contains(t, out)) {
      found = t;
      break;
    }
    for (NodeId ch : td.children(t))
      if (!seen[ch]) {
        seen[ch] = true;
        prev[ch] = t;
        queue.push_back(ch);
      }
  }
  if (found == kNoNode) throw PreconditionError("output gate is in no bag");
  if (found == td.root()) return td;
  auto bags = td.bags();
  for (NodeId t = prev[found]; t != kNoNode; t = prev[t]) bags[t].push_back(out);
  return TreeDecomposition(std::move(bags), td.edges(), td.root());
}

std::pair<std::size_t, TreeDecomposition> exact_treewidth(const Graph& g) {
  const std::size_t n = g.n;
  if (n > kExactTreewidthMaxVertices)
    throw PreconditionError("exact_treewidth: " + std::to_string(n) + " vertices exceeds the cap of " +
                            std::to_string(kExactTreewidthMaxVertices));
  if (n == 0) return {0, TreeDecomposition()};
  std::vector<std::uint32_t> nb(n, 0);
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    nb[u - 1] |= 1u << (v - 1);
    nb[v - 1] |= 1u << (u - 1);
  }
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
  // q(S, v): vertices outside S u {v} reachable from v through S.
  auto q = [&](std::uint32_t s, std::size_t v) {
    std::uint32_t visited = 1u << v, frontier = 1u << v, outside = 0;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::size_t u = 0; u < n; ++u)
        if (frontier & (1u << u)) next |= nb[u];
      next &= ~visited;
      visited |= next;
      outside |= next & ~s;
      frontier = next & s;
    }
    return static_cast<int>(__builtin_popcount(outside));
  };
  std::vector<int> tw(std::size_t(1) << n, 0);
  std::vector<std::int8_t> choice(std::size_t(1) << n, -1);
  tw[0] = -1;
  for (std::uint32_t s = 1; s <= full; ++s) {
    int best = 1 << 30;
    for (std::size_t v = 0; v < n; ++v) {
      if (!(s & (1u << v))) continue;
      std::uint32_t rest = s & ~(1u << v);
      int val = std::max(tw[rest], q(rest, v));
      if (val < best) {
        best = val;
        choice[s] = static_cast<std::int8_t>(v);
      }
    }
    tw[s] = best;
  }
  // Recover the elimination order (first eliminated first).
  std::vector<std::size_t> order;
  for (std::uint32_t s = full; s; s &= ~(1u << choice[s])) order.push_back(static_cast<std::size_t>(choice[s]));
  std::reverse(order.begin(), order.end());

  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<std::uint32_t> fill = nb;
  std::vector<std::vector<Vertex>> bags(n);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> roots;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t v = order[i];
    std::uint32_t later = 0;
    for (std::size_t u = 0; u < n; ++u)
      if ((fill[v] & (1u << u)) && pos[u] > i) later |= 1u << u;
    bags[i].push_back(static_cast<Vertex>(v + 1));
    std::size_t parent = n;
    for (std::size_t u = 0; u < n; ++u)
      if (later & (1u << u)) {
        bags[i].push_back(static_cast<Vertex>(u + 1));
        fill[u] |= later & ~(1u << u);
        if (parent == n || pos[u] < pos[parent]) parent = u;
      }
    if (parent == n) roots.push_back(static_cast<NodeId>(i));
    else edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(pos[parent])});
  }
  for (std::size_t i = 1; i < roots.size(); ++i) edges.push_back({roots[i - 1], roots[i]});
  TreeDecomposition td(std::move(bags), edges, roots.back());
  return {static_cast<std::size_t>(std::max(tw[full], 0)), td};
}

TreeDecomposition map_vertices(const TreeDecomposition& td, const std::vector<Vertex>& map) {
  auto bags = td.bags();
  for (auto& b : bags) {
    std::vector<Vertex> nb;
    for (Vertex v : b)
      if (v < map.size() && map[v] != 0) nb.push_back(map[v]);
    b = std::move(nb);
  }
  if (td.node_count() == 0) return td;
  return TreeDecomposition(std::move(bags), td.edges(), td.root());
}

}  // namespace twf
