#pragma once

#include <cstdint>

#include "twflat/analysis.hpp"
#include "twflat/circuit.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf {

struct ReachInstance {
  Graph graph;  // directed, vertices 1..n
  Vertex s = 1;
  Vertex t = 1;
  TreeDecomposition td;
};

struct ReachCircuit {
  Circuit circuit;  // boolean
  TreeDecomposition td;
  Assignment assignment;
  std::size_t input_width = 0;
  std::size_t components = 0;  // strongly connected components of the graph
  /// Most chain gates of high in-degree vertices sharing one bag.
  std::size_t chain_gates_per_bag = 0;
};

/// One OR gate per strongly connected component, an AND per edge with its
/// own input variable, and a constant 1 feeding the source's OR.
ReachCircuit reach_to_circuit(const ReachInstance& r);

struct FrameBudget {
  std::size_t k = 0;  // width of the decomposition being evaluated
  std::uint64_t max_bits() const { return k + 1 >= 63 ? UINT64_MAX : std::uint64_t{1} << (k + 1); }
  std::size_t max_z_vars() const { return k + 1; }
};

struct FrameTelemetry {
  FrameBudget budget;
  std::uint64_t frames = 0;
  std::size_t max_live_frames = 0;
  /// Dense coefficient-vector length, 2^(z-variables), of the largest
  /// polynomial held by a frame.
  std::uint64_t max_frame_bits = 0;
  std::size_t max_frame_z_vars = 0;
  std::size_t max_monomials = 0;
};

struct FrameEvalOptions {
  bool memoize = true;
};

/// GF(2) value of an arithmetic circuit at x, by the traceback recursion on
/// an explicit stack with z-polynomials as frame payloads. The
/// decomposition is balanced and the pair preprocessed internally.
int eval_bounded_frames(const Circuit& c, const TreeDecomposition& td, const Assignment& x,
                        FrameTelemetry* telemetry = nullptr, FrameEvalOptions options = {});

bool bfs_oracle(const Graph& g, Vertex s, Vertex t);

struct ReachResult {
  bool reachable = false;
  std::size_t circuit_size = 0;
  std::size_t circuit_width = 0;  // decomposition width of the boolean circuit
  std::size_t chain_gates_per_bag = 0;
  FrameTelemetry telemetry;
};

ReachResult solve_reach(const ReachInstance& r, FrameEvalOptions options = {});

}  // namespace twf
