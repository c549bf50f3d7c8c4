#pragma once

#include <string>
#include <string_view>

#include "twflat/tree_decomposition.hpp"

namespace twf {

/// PACE `.gr`: `p tw <n> <m>` then `u v` lines; `c` lines are comments.
Graph parse_graph(std::string_view text, bool directed = false);
std::string write_graph(const Graph& g);

/// PACE `.td`: `s td <#bags> <max-bag> <n>`, `b <id> <v...>`, `<id> <id>`.
/// The root is bag 1. Writing renumbers bags in preorder so the root gets 1.
TreeDecomposition parse_td(std::string_view text);
std::string write_td(const TreeDecomposition& td, std::size_t n);

Graph read_graph_file(const std::string& path, bool directed = false);
TreeDecomposition read_td_file(const std::string& path);

}  // namespace twf
