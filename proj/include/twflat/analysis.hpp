#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "twflat/circuit.hpp"
#include "twflat/field.hpp"
#include "twflat/polynomial.hpp"

namespace twf {

using Assignment = std::map<std::string, Int>;
using Bitset = boost::dynamic_bitset<>;

/// Value of the output gate. Arithmetic circuits use ring semantics reduced
/// per `field`; boolean circuits evaluate over {0,1} and ignore `field`.
/// ZVar leaves are an error unless `allow_placeholders`, in which case they
/// are read from the assignment like variables.
Int evaluate(const Circuit& c, const Assignment& a, const FieldSpec& field, bool allow_placeholders = false);

/// Inductive degree (leaves 1, Add max, Mul sum), maximised over all gates.
/// Saturates at UINT64_MAX.
std::uint64_t formal_degree(const Circuit& c);

/// Ancestor sets: bit u of result[g-1] is set iff u reaches g (reflexive).
std::vector<Bitset> ancestor_sets(const Circuit& c);

/// Length of the longest iterated multiplication chain, M(c).
std::size_t mult_chain_length(const Circuit& c);
bool is_multiplicatively_disjoint(const Circuit& c);

/// Every Mul gate's two input cones use disjoint variable sets (ZVar leaves
/// count as variables).
bool is_syntactically_multilinear(const Circuit& c);

/// Maximum number of gates on a level; throws if the circuit is not leveled.
std::size_t circuit_width(const Circuit& c);

/// Longest leaf-to-output path in edges.
std::size_t circuit_depth(const Circuit& c);

inline constexpr std::size_t kDefaultProofTreeBudget = 1000000;

/// Sum over proof trees rooted at the output whose ZVar leaves are exactly
/// `zset` (each once) of the product of their remaining leaves. Throws
/// BudgetExceeded when more than `budget` trees would be enumerated.
SparsePolynomial proof_tree_coefficient(const Circuit& c, const std::set<std::string>& zset,
                                        std::size_t budget = kDefaultProofTreeBudget);

}  // namespace twf
