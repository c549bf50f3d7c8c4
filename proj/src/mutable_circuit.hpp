#pragma once

// Editable gate pool used by rewrites that append gates out of topological
// order. finalize() renumbers topologically and rebuilds bags.

#include <optional>
#include <string>
#include <vector>

#include "twflat/circuit.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf::detail {

struct MGate {
  Op op = Op::Input;
  std::string name;
  std::string variable;
  GateId ref = kNoGate;
  Int value;
  std::vector<GateId> in;
  bool alive = true;
};

struct Finalized {
  Circuit circuit;
  TreeDecomposition td;
  /// Pool id (1-based) of every gate of the new circuit, index new id - 1.
  std::vector<GateId> pool_id;
  /// New id of every pool gate (index pool id), kNoGate for dropped gates.
  std::vector<GateId> new_id;
};

class MutableCircuit {
 public:
  explicit MutableCircuit(CircuitKind kind) : kind_(kind) {}
  explicit MutableCircuit(const Circuit& c);

  CircuitKind kind() const { return kind_; }
  std::size_t size() const { return gates_.size(); }
  MGate& at(GateId id) { return gates_.at(id - 1); }
  const MGate& at(GateId id) const { return gates_.at(id - 1); }
  GateId add(MGate g) {
    gates_.push_back(std::move(g));
    return static_cast<GateId>(gates_.size());
  }
  GateId output = kNoGate;

  /// Gates reaching the output (index pool id).
  std::vector<bool> live_mask() const;

  /// Topologically renumber (ties by pool id), dropping gates marked dead.
  /// Bags are mapped accordingly; `levels` (per pool id) become explicit
  /// levels of the result when given.
  Finalized finalize(const std::vector<std::vector<Vertex>>& bags, const std::vector<std::pair<NodeId, NodeId>>& edges,
                     NodeId root, const std::optional<std::vector<int>>& levels = std::nullopt) const;
  /// Same without a decomposition (the result td is empty).
  Finalized finalize(const std::optional<std::vector<int>>& levels = std::nullopt) const;

 private:
  CircuitKind kind_;
  std::vector<MGate> gates_;
};

}  // namespace twf::detail
