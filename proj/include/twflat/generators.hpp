#pragma once

#include <cstdint>

#include "twflat/circuit.hpp"
#include "twflat/transforms.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf {

struct GenOptions {
  std::size_t gates = 30;
  std::size_t k = 3;  // bag size limit is k + 1
  std::size_t max_vars = 8;
  bool md = false;       // never build a Mul whose inputs share an ancestor
  bool sm = false;       // never build a Mul whose inputs share a variable
  bool boolean = false;  // and/or/not instead of add/mul
  std::uint64_t seed = 1;
};

/// Random circuit grown along a random binary tree decomposition: each bag
/// keeps gates handed up by its children and adds new gates whose inputs lie
/// in the bag, so the decomposition is valid with width <= k by construction.
/// Dead gates are pruned.
CircuitTd random_circuit_td(const GenOptions& opt);

struct LeveledOptions {
  std::size_t width = 3;
  std::size_t levels = 5;
  std::size_t max_vars = 6;
  bool fanout2 = false;  // cap every gate's fan-out at 2
  double mul_prob = 0.5;
  std::uint64_t seed = 1;
};

/// Random leveled arithmetic circuit with one output on the last level.
Circuit random_leveled(const LeveledOptions& opt);

/// Random graph with a valid decomposition of width <= k. `deep` yields
/// long paths and high-degree tree nodes (inputs that need balancing).
struct GraphTd {
  Graph graph;
  TreeDecomposition td;
};
GraphTd random_graph_td(std::size_t n, std::size_t k, bool directed, bool deep, double edge_prob, std::uint64_t seed);

}  // namespace twf
