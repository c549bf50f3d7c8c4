#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "twflat/circuit.hpp"

namespace twf {

using Vertex = std::uint32_t;  // 1-based, shared with GateId numbering
using NodeId = std::uint32_t;  // 0-based tree node index
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<Vertex, Vertex>> edges;
  bool directed = false;
};

/// Underlying directed graph of a circuit: one edge per (input, gate) pair.
Graph graph_of(const Circuit& c);

/// Rooted tree of bags. Bags are sorted vertex lists.
class TreeDecomposition {
 public:
  TreeDecomposition() = default;
  /// Throws PreconditionError unless `edges` form a tree on the bag indices.
  TreeDecomposition(std::vector<std::vector<Vertex>> bags, const std::vector<std::pair<NodeId, NodeId>>& edges,
                    NodeId root = 0);

  std::size_t node_count() const { return bags_.size(); }
  NodeId root() const { return root_; }
  const std::vector<Vertex>& bag(NodeId t) const { return bags_.at(t); }
  const std::vector<std::vector<Vertex>>& bags() const { return bags_; }
  NodeId parent(NodeId t) const { return parent_.at(t); }
  const std::vector<NodeId>& children(NodeId t) const { return children_.at(t); }
  std::vector<std::pair<NodeId, NodeId>> edges() const;
  bool contains(NodeId t, Vertex v) const;
  bool is_leaf(NodeId t) const { return children_.at(t).empty(); }
  /// Nodes with parents before children.
  std::vector<NodeId> preorder() const;
  /// Height of each node (leaves 0).
  std::vector<std::size_t> heights() const;
  std::size_t max_vertex() const;

  /// Same tree rooted elsewhere.
  TreeDecomposition rerooted(NodeId r) const;

 private:
  std::vector<std::vector<Vertex>> bags_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<NodeId> parent_;
  std::vector<std::vector<NodeId>> children_;
  NodeId root_ = 0;
};

struct Violation {
  enum class Kind { VertexRange, VertexCoverage, EdgeCoverage, Connectivity };
  Kind kind;
  Vertex vertex = 0;                      // VertexRange / VertexCoverage / Connectivity witness
  std::pair<Vertex, Vertex> edge{0, 0};   // EdgeCoverage witness
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Checks vertex coverage, edge coverage and per-vertex connectivity.
ValidationReport validate_td(const Graph& g, const TreeDecomposition& td);

/// max bag size - 1 (0 for an empty decomposition).
std::size_t td_width(const TreeDecomposition& td);
/// Edges on the longest root-to-leaf path.
std::size_t td_depth(const TreeDecomposition& td);
/// Union of the bags in the subtree rooted at t, sorted.
std::vector<Vertex> bag_below(const TreeDecomposition& td, NodeId t);
/// Membership masks for bag_below at every node (bit v set iff v below t).
std::vector<std::vector<bool>> below_masks(const TreeDecomposition& td);

/// Path decomposition with bags L_{j-1} u L_j, rooted at the last bag.
TreeDecomposition td_from_leveled(const Circuit& c);

/// 2 * ceil(log_{5/4} n), the depth target of balance_td.
std::size_t balanced_depth_bound(std::size_t n);

struct BalanceOptions {
  /// Rebuild even when the input already is binary and shallow enough.
  bool force = false;
};

/// Rooted binary decomposition of width <= 3k + 2 and depth <=
/// 2 * ceil(log_{5/4} n). Inputs already meeting both bounds are returned
/// unchanged unless options.force.
TreeDecomposition balance_td(const Graph& g, const TreeDecomposition& td, BalanceOptions options = {});

/// Adds the output gate to every bag on the path from the root to the
/// nearest bag already holding it.
TreeDecomposition root_with_output(const TreeDecomposition& td, const Circuit& c);

inline constexpr std::size_t kExactTreewidthMaxVertices = 13;

/// Exact treewidth by dynamic programming over eliminated vertex subsets,
/// with a witnessing decomposition. Direction is ignored.
std::pair<std::size_t, TreeDecomposition> exact_treewidth(const Graph& g);

/// Copy of td with each bag mapped through `map` (index v, 0 entries drop v).
TreeDecomposition map_vertices(const TreeDecomposition& td, const std::vector<Vertex>& map);

}  // namespace twf
