#pragma once

// Small independent oracles shared by the unit tests.

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "twflat/circuit.hpp"
#include "twflat/circuit_io.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf::test {

inline Circuit ckt(const std::string& text) { return parse_circuit(text); }

// Plain recursive evaluation mod m (m = 0: exact), written without the
// library's evaluator.
inline Int naive_eval(const Circuit& c, const std::map<std::string, Int>& x, std::uint64_t m = 0) {
  std::vector<Int> val(c.size() + 1);
  auto red = [&](Int v) {
    if (m == 0) return v;
    Int r = v % Int(m);
    return r < 0 ? r + Int(m) : r;
  };
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    switch (g.op) {
      case Op::Input:
      case Op::ZVar:
        val[id] = red(x.at(g.variable));
        break;
      case Op::Const:
        val[id] = red(g.value);
        break;
      case Op::Add:
        val[id] = red(g.arity() == 1 ? val[g.input(0)] : val[g.input(0)] + val[g.input(1)]);
        break;
      case Op::Mul:
        val[id] = red(val[g.input(0)] * val[g.input(1)]);
        break;
      case Op::And:
        val[id] = (val[g.input(0)] != 0 && val[g.input(1)] != 0) ? 1 : 0;
        break;
      case Op::Or:
        val[id] = (val[g.input(0)] != 0 || (g.arity() == 2 && val[g.input(1)] != 0)) ? 1 : 0;
        break;
      case Op::Not:
        val[id] = val[g.input(0)] != 0 ? 0 : 1;
        break;
    }
  }
  return val[c.output()];
}

inline std::map<std::string, Int> random_point(const Circuit& c, std::mt19937_64& rng, std::uint64_t range) {
  std::map<std::string, Int> x;
  for (const auto& v : c.variables()) x[v] = Int(rng() % range);
  return x;
}

// Every 0/1 assignment to the circuit's variables.
inline std::vector<std::map<std::string, Int>> all_points(const std::vector<std::string>& vars, std::uint64_t q = 2) {
  std::vector<std::map<std::string, Int>> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < vars.size(); ++i) total *= q;
  for (std::size_t m = 0; m < total; ++m) {
    std::map<std::string, Int> x;
    std::size_t r = m;
    for (const auto& v : vars) {
      x[v] = Int(r % q);
      r /= q;
    }
    out.push_back(std::move(x));
  }
  return out;
}

// Decomposition check written from the definition: every vertex and edge is
// covered and the nodes holding each vertex induce a connected subtree.
inline bool td_valid(const Graph& g, const TreeDecomposition& td) {
  std::size_t m = td.node_count();
  if (m == 0) return g.n == 0;
  std::vector<std::vector<NodeId>> adj(m);
  for (auto [a, b] : td.edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  auto holds = [&](NodeId t, Vertex v) {
    const auto& bag = td.bag(t);
    return std::find(bag.begin(), bag.end(), v) != bag.end();
  };
  for (Vertex v = 1; v <= g.n; ++v) {
    std::vector<NodeId> with;
    for (NodeId t = 0; t < m; ++t)
      if (holds(t, v)) with.push_back(t);
    if (with.empty()) return false;
    std::vector<bool> seen(m, false);
    std::vector<NodeId> stack{with[0]};
    seen[with[0]] = true;
    std::size_t reached = 0;
    while (!stack.empty()) {
      NodeId t = stack.back();
      stack.pop_back();
      ++reached;
      for (NodeId u : adj[t])
        if (!seen[u] && holds(u, v)) {
          seen[u] = true;
          stack.push_back(u);
        }
    }
    if (reached != with.size()) return false;
  }
  for (auto [u, v] : g.edges) {
    bool ok = false;
    for (NodeId t = 0; t < m && !ok; ++t) ok = holds(t, u) && holds(t, v);
    if (!ok) return false;
  }
  return true;
}

}  // namespace twf::test
