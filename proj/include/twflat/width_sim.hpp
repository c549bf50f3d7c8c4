#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twflat/circuit.hpp"
#include "twflat/transforms.hpp"

namespace twf {

enum class SimAction { Leaf, Combine, ZLeaf, Descend };

struct SimTraceRecord {
  NodeId node;
  std::size_t index;  // position of the gate in the bag's topological order
  GateId gate;
  SimAction action;
  NodeId child = kNoNode;     // Descend only
  std::size_t width;          // width of the partial circuit after this step
};

struct SimNodeWidth {
  NodeId node;
  std::size_t width;
  std::size_t child_width;  // max over children, 0 at leaves
};

struct WidthSimReport {
  Circuit output;
  std::size_t width = 0;
  std::size_t size_total = 0;
  std::vector<SimTraceRecord> per_level_trace;
  std::vector<SimNodeWidth> node_widths;
  std::size_t max_width_delta = 0;
};

struct WidthSimOptions {
  std::uint64_t max_gates = 20'000'000;
};

/// Leveled simulation of a preprocessed pair; width grows by at most the
/// bag size per tree level.
WidthSimReport width_simulate(const PreprocessedPair& p, WidthSimOptions options = {});

/// balance_td, root_with_output and preprocess, then width_simulate.
WidthSimReport width_simulate(const Circuit& c, const TreeDecomposition& td, WidthSimOptions options = {});

std::string to_string(SimAction a);

}  // namespace twf
