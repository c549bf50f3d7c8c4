#include "twflat/reach.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>

#include "mutable_circuit.hpp"
#include "twflat/error.hpp"
#include "twflat/traceback.hpp"
#include "twflat/transforms.hpp"

namespace twf {

using detail::MGate;
using detail::MutableCircuit;

namespace {

// Strongly connected component (1-based) of every vertex (index 1..n).
std::vector<Vertex> components(const Graph& g, std::size_t& count) {
  const std::size_t n = g.n;
  std::vector<std::vector<Vertex>> adj(n + 1);
  for (auto [u, v] : g.edges) adj[u].push_back(v);
  std::vector<std::size_t> index(n + 1, 0), low(n + 1, 0);
  std::vector<bool> on_stack(n + 1, false);
  std::vector<Vertex> comp(n + 1, 0), stack;
  std::size_t next = 1;
  count = 0;
  for (Vertex root = 1; root <= n; ++root) {
    if (index[root]) continue;
    std::vector<std::pair<Vertex, std::size_t>> work{{root, 0}};
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!work.empty()) {
      auto& [v, i] = work.back();
      if (i < adj[v].size()) {
        Vertex w = adj[v][i++];
        if (!index[w]) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = true;
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        ++count;
        Vertex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = static_cast<Vertex>(count);
        } while (w != v);
      }
      Vertex done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comp;
}

void check_instance(const ReachInstance& r) {
  if (r.graph.n == 0) throw PreconditionError("reach: empty graph");
  if (r.s < 1 || r.s > r.graph.n || r.t < 1 || r.t > r.graph.n) throw PreconditionError("reach: s or t out of range");
  auto rep = validate_td(r.graph, r.td);
  if (!rep.ok()) throw PreconditionError("reach: invalid decomposition: " + rep.violations[0].message);
}

}  // namespace

bool bfs_oracle(const Graph& g, Vertex s, Vertex t) {
  std::vector<std::vector<Vertex>> adj(g.n + 1);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    if (!g.directed) adj[v].push_back(u);
  }
  std::vector<bool> seen(g.n + 1, false);
  std::deque<Vertex> queue{s};
  seen[s] = true;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    if (v == t) return true;
    for (Vertex w : adj[v])
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
  }
  return false;
}

ReachCircuit reach_to_circuit(const ReachInstance& r) {
  check_instance(r);
  Graph g = r.graph;
  if (!g.directed) {
    for (std::size_t i = 0, m = g.edges.size(); i < m; ++i) g.edges.push_back({g.edges[i].second, g.edges[i].first});
    g.directed = true;
  }
  std::size_t nc = 0;
  std::vector<Vertex> comp = components(g, nc);
  std::vector<Vertex> rep(nc + 1, 0);
  for (Vertex v = g.n; v >= 1; --v) rep[comp[v]] = v;
  std::set<std::pair<Vertex, Vertex>> edges;
  for (auto [u, v] : g.edges)
    if (comp[u] != comp[v]) edges.insert({comp[u], comp[v]});
  TreeDecomposition ctd = map_vertices(r.td, comp);

  ReachCircuit out;
  out.input_width = td_width(r.td);
  out.components = nc;
  MutableCircuit mc(CircuitKind::Boolean);
  std::vector<GateId> vor(nc + 1);
  for (Vertex c = 1; c <= nc; ++c) {
    MGate g;
    g.op = Op::Or;
    g.name = "or_" + std::to_string(rep[c]);
    vor[c] = mc.add(g);
  }
  std::vector<std::vector<GateId>> feeds(nc + 1);
  std::vector<std::pair<std::pair<Vertex, Vertex>, std::pair<GateId, GateId>>> edge_gates;
  for (auto [u, v] : edges) {
    std::string tag = std::to_string(rep[u]) + "_" + std::to_string(rep[v]);
    MGate x;
    x.op = Op::Input;
    x.variable = "x_" + tag;
    x.name = x.variable;
    GateId xid = mc.add(x);
    MGate a;
    a.op = Op::And;
    a.name = "and_" + tag;
    a.in = {vor[u], xid};
    GateId aid = mc.add(a);
    feeds[v].push_back(aid);
    edge_gates.push_back({{u, v}, {aid, xid}});
    out.assignment[x.variable] = 1;
  }
  MGate one;
  one.op = Op::Const;
  one.value = 1;
  one.name = "one";
  GateId one_id = mc.add(one);
  feeds[comp[r.s]].push_back(one_id);

  // Fan-in above two becomes a chain; its inner gates join every bag of
  // the vertex.
  std::vector<std::vector<GateId>> chain(nc + 1);
  for (Vertex c = 1; c <= nc; ++c) {
    const auto& in = feeds[c];
    if (in.empty()) {
      MGate& g = mc.at(vor[c]);
      g.op = Op::Const;
      g.value = 0;
      continue;
    }
    if (in.size() <= 2) {
      mc.at(vor[c]).in = in;
      continue;
    }
    GateId acc = in[0];
    for (std::size_t i = 1; i + 1 < in.size(); ++i) {
      MGate g;
      g.op = Op::Or;
      g.in = {acc, in[i]};
      acc = mc.add(g);
      chain[c].push_back(acc);
    }
    mc.at(vor[c]).in = {acc, in.back()};
  }

  std::vector<std::vector<Vertex>> bags;
  for (NodeId d = 0; d < ctd.node_count(); ++d) {
    std::vector<Vertex> b;
    std::size_t extra = 0;
    for (Vertex c : ctd.bag(d)) {
      b.push_back(vor[c]);
      b.insert(b.end(), chain[c].begin(), chain[c].end());
      extra += chain[c].size();
    }
    out.chain_gates_per_bag = std::max(out.chain_gates_per_bag, extra);
    bags.push_back(std::move(b));
  }
  auto tree_edges = ctd.edges();
  auto holder = [&](std::initializer_list<Vertex> cs) -> NodeId {
    for (NodeId d = 0; d < ctd.node_count(); ++d)
      if (std::all_of(cs.begin(), cs.end(), [&](Vertex c) { return ctd.contains(d, c); })) return d;
    throw Error("reach: no bag holds both endpoints of an edge");
  };
  auto attach = [&](NodeId d, std::vector<Vertex> extra) {
    std::vector<Vertex> b = bags[d];
    b.insert(b.end(), extra.begin(), extra.end());
    bags.push_back(std::move(b));
    tree_edges.push_back({d, static_cast<NodeId>(bags.size() - 1)});
  };
  for (const auto& [e, g] : edge_gates) attach(holder({e.first, e.second}), {g.first, g.second});
  attach(holder({comp[r.s]}), {one_id});

  mc.output = vor[comp[r.t]];
  auto fin = mc.finalize(bags, tree_edges, ctd.root());
  out.circuit = std::move(fin.circuit);
  out.td = std::move(fin.td);
  return out;
}

namespace {

using Mono = std::vector<GateId>;  // sorted z-gates
using Poly = std::set<Mono>;      // GF(2) coefficients, multilinear

void toggle(Poly& p, Mono m) {
  auto [it, fresh] = p.insert(std::move(m));
  if (!fresh) p.erase(it);
}

Mono join(const Mono& a, const Mono& b) {
  Mono m;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
  return m;
}

Poly add(const Poly& a, const Poly& b) {
  Poly r = a;
  for (const Mono& m : b) toggle(r, m);
  return r;
}

Poly mul(const Poly& a, const Poly& b) {
  Poly r;
  for (const Mono& x : a)
    for (const Mono& y : b) toggle(r, join(x, y));
  return r;
}

// p with z replaced by q.
Poly substitute(const Poly& p, GateId z, const Poly& q) {
  Poly r;
  for (const Mono& m : p) {
    auto it = std::find(m.begin(), m.end(), z);
    if (it == m.end()) {
      toggle(r, m);
      continue;
    }
    Mono rest = m;
    rest.erase(rest.begin() + (it - m.begin()));
    for (const Mono& y : q) toggle(r, join(rest, y));
  }
  return r;
}

std::vector<GateId> zvars(const Poly& p) {
  std::set<GateId> s;
  for (const Mono& m : p) s.insert(m.begin(), m.end());
  return {s.begin(), s.end()};
}

struct Frame {
  NodeId t = 0;
  GateId f = kNoGate;
  int stage = 0;
  Classified cls{};
  Poly acc;
  std::vector<GateId> zs;
  std::size_t zi = 0;
};

class FrameEvaluator {
 public:
  FrameEvaluator(const PreprocessedPair& p, FrameTelemetry& tel, FrameEvalOptions opt)
      : ctx_(p.circuit, p.td), tel_(tel), opt_(opt) {
    tel_.budget.k = td_width(p.td);
  }

  int run() {
    const Circuit& c = ctx_.circuit();
    std::vector<Frame> stack;
    Poly ret;
    auto push = [&](NodeId t, GateId f) {
      Frame fr;
      fr.t = t;
      fr.f = f;
      stack.push_back(std::move(fr));
      ++tel_.frames;
      tel_.max_live_frames = std::max(tel_.max_live_frames, stack.size());
    };
    push(ctx_.td().root(), c.output());
    while (!stack.empty()) {
      const std::size_t top = stack.size() - 1;
      Frame& fr = stack[top];
      bool done = false;
      switch (fr.stage) {
        case 0: {
          if (opt_.memoize)
            if (auto it = memo_.find({fr.t, fr.f}); it != memo_.end()) {
              ret = it->second;
              stack.pop_back();
              continue;
            }
          const Gate& g = c.gate(fr.f);
          fr.cls = ctx_.classify(fr.t, fr.f);
          switch (fr.cls.step) {
            case Step::Leaf:
              if (g.op != Op::Const) throw PreconditionError("eval_bounded_frames: unassigned input " + g.variable);
              ret = mod_floor(g.value, Int(2)) == 1 ? Poly{Mono{}} : Poly{};
              done = true;
              break;
            case Step::ZLeaf:
              ret = Poly{Mono{fr.f}};
              done = true;
              break;
            case Step::Combine:
              fr.stage = 1;
              push(fr.t, g.input(0));
              break;
            case Step::Descend:
              fr.stage = 10;
              push(fr.cls.child, fr.f);
              break;
          }
          break;
        }
        case 1: {
          const Gate& g = c.gate(fr.f);
          if (g.arity() == 1) {
            done = true;
            break;
          }
          fr.acc = ret;
          charge(fr.acc);
          fr.stage = 2;
          push(fr.t, g.input(1));
          break;
        }
        case 2:
          ret = c.gate(fr.f).op == Op::Mul ? mul(fr.acc, ret) : add(fr.acc, ret);
          done = true;
          break;
        case 10:
          fr.acc = ret;
          fr.zs = zvars(fr.acc);
          fr.stage = 11;
          [[fallthrough]];
        case 11:
          charge(fr.acc);
          if (fr.zi < fr.zs.size()) {
            fr.stage = 12;
            push(fr.t, fr.zs[fr.zi]);
          } else {
            ret = std::move(fr.acc);
            done = true;
          }
          break;
        case 12:
          charge(ret);
          fr.acc = substitute(fr.acc, fr.zs[fr.zi], ret);
          ++fr.zi;
          fr.stage = 11;
          break;
      }
      if (!done) continue;
      charge(ret);
      for (GateId z : zvars(ret))
        if (!ctx_.td().contains(stack[top].t, z)) throw Error("eval_bounded_frames: z-variable escapes its bag");
      if (opt_.memoize) memo_.emplace(std::make_pair(stack[top].t, stack[top].f), ret);
      stack.pop_back();
    }
    if (ret.empty()) return 0;
    if (ret.size() == 1 && ret.begin()->empty()) return 1;
    throw Error("eval_bounded_frames: z-variables survive at the root");
  }

 private:
  void charge(const Poly& p) {
    std::size_t zs = zvars(p).size();
    std::uint64_t bits = zs >= 63 ? UINT64_MAX : std::uint64_t{1} << zs;
    tel_.max_frame_z_vars = std::max(tel_.max_frame_z_vars, zs);
    tel_.max_frame_bits = std::max(tel_.max_frame_bits, bits);
    tel_.max_monomials = std::max(tel_.max_monomials, p.size());
    if (zs > tel_.budget.max_z_vars() || bits > tel_.budget.max_bits())
      throw Error("eval_bounded_frames: frame budget exceeded");
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<NodeId, GateId>& k) const {
      return std::hash<std::uint64_t>()((std::uint64_t{k.first} << 32) | k.second);
    }
  };

  TracebackContext ctx_;
  FrameTelemetry& tel_;
  FrameEvalOptions opt_;
  std::unordered_map<std::pair<NodeId, GateId>, Poly, KeyHash> memo_;
};

}  // namespace

int eval_bounded_frames(const Circuit& c, const TreeDecomposition& td, const Assignment& x, FrameTelemetry* telemetry,
                        FrameEvalOptions options) {
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("eval_bounded_frames: circuit is not arithmetic");
  auto rep = validate_td(graph_of(c), td);
  if (!rep.ok()) throw PreconditionError("eval_bounded_frames: invalid decomposition: " + rep.violations[0].message);
  // Inputs become their bits; gate ids are unchanged.
  CircuitBuilder cb(CircuitKind::Arithmetic);
  for (const Gate& g : c.gates()) {
    if (g.op == Op::Input) {
      auto it = x.find(g.variable);
      if (it == x.end()) throw PreconditionError("eval_bounded_frames: no value for " + g.variable);
      cb.constant(mod_floor(it->second, Int(2)));
    } else if (g.op == Op::ZVar) {
      throw PreconditionError("eval_bounded_frames: placeholder gate " + g.name);
    } else {
      std::vector<GateId> ins(g.inputs().begin(), g.inputs().end());
      cb.copy_gate(g, ins);
    }
  }
  Circuit bits = cb.build(c.output());
  TreeDecomposition bal = root_with_output(balance_td(graph_of(bits), td), bits);
  PreprocessedPair p = preprocess(bits, bal);
  FrameTelemetry local;
  FrameTelemetry& tel = telemetry ? *telemetry : local;
  tel = FrameTelemetry{};
  return FrameEvaluator(p, tel, options).run();
}

ReachResult solve_reach(const ReachInstance& r, FrameEvalOptions options) {
  ReachCircuit rc = reach_to_circuit(r);
  CircuitTd ar = arithmetize(rc.circuit, rc.td);
  ReachResult out;
  out.circuit_size = rc.circuit.size();
  out.circuit_width = td_width(rc.td);
  out.chain_gates_per_bag = rc.chain_gates_per_bag;
  out.reachable = eval_bounded_frames(ar.circuit, ar.td, rc.assignment, &out.telemetry, options) == 1;
  return out;
}

}  // namespace twf
