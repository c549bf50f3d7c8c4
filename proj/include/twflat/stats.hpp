#pragma once

#include <cstdint>
#include <optional>

#include "twflat/circuit.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf {

struct StatsReport {
  std::size_t size_ops = 0;
  std::size_t size_total = 0;
  std::size_t depth = 0;
  std::uint64_t formal_degree = 0;
  std::size_t mult_chain_length = 0;
  bool is_md = false;
  bool is_sm = false;
  std::optional<std::size_t> circuit_width;  // leveled circuits only
  std::optional<std::size_t> td_width;
  std::optional<std::size_t> td_depth;
};

StatsReport compute_stats(const Circuit& c, const TreeDecomposition* td = nullptr);

}  // namespace twf
