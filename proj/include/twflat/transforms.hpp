#pragma once

#include <cstdint>
#include <vector>

#include "twflat/circuit.hpp"
#include "twflat/formula.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf {

struct CircuitTd {
  Circuit circuit;
  TreeDecomposition td;
};

struct PreprocessedPair {
  Circuit circuit;
  TreeDecomposition td;
  /// Originating gate of every gate (index new id - 1); kNoGate for inserted gates.
  std::vector<GateId> provenance;
};

/// For every bag X_t and binary gate g in it, both inputs are in X_t or both
/// are outside it, and in the latter case both or neither lie below t.
bool check_preprocessed(const Circuit& c, const TreeDecomposition& td);
inline bool check_preprocessed(const PreprocessedPair& p) { return check_preprocessed(p.circuit, p.td); }

/// Resolves mixed-input bags by routing the missing input g2 through a new
/// gate a = b + g2 (b or g2 for boolean circuits), where b is a zero
/// constant shared per g2. a joins the bags of g that also hold g1 when one
/// of those holds g2 as well, else every bag of g; b joins the bags shared
/// by a and g2 and the tree paths between them.
PreprocessedPair preprocess(const Circuit& c, const TreeDecomposition& td);

/// Boolean circuit to GF(2) arithmetic circuit: and -> mul, not f -> 1 + f,
/// f1 or f2 -> (f1 + f2) + f1 * f2 with the or gate's vertex hosting the
/// inner sum.
CircuitTd arithmetize(const Circuit& c, const TreeDecomposition& td);

/// GF(2) formula to boolean formula: mul -> and, a + b -> (a and not b) or
/// (not a and b). Constants other than 0 and 1 are rejected.
Formula dearithmetize(const Formula& f);
Circuit dearithmetize(const Circuit& formula);

/// Leveled circuit with every fan-out <= 2, using trees of x + 0 copies.
/// Levels are stretched by the copy-tree depth. Fan-out <= 2 inputs are
/// returned unchanged.
Circuit reduce_fanout(const Circuit& c);

struct MdResult {
  Circuit circuit;
  TreeDecomposition td;
  /// Copies made at each recursion depth (index 0 = top level).
  std::vector<std::size_t> copies_per_depth;
};

/// Multiplicatively disjoint equivalent of a leveled circuit with fan-out
/// <= 2, by copying cones of doubly used gates level by level.
MdResult md_transform(const Circuit& c);

/// (s^(d+2) - 1) / (s - 1) - 1, saturating.
std::uint64_t md_size_bound(std::uint64_t s, std::uint64_t d);

/// Replaces variable-free gates by constants, splits shared constants into
/// per-consumer copies and drops dead gates. Requires a syntactically
/// multilinear circuit; the result is multiplicatively disjoint.
CircuitTd sm_normalize(const Circuit& c, const TreeDecomposition& td);

}  // namespace twf
