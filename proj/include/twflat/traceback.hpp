#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "twflat/formula.hpp"
#include "twflat/transforms.hpp"
#include "twflat/tree_decomposition.hpp"

namespace twf {

enum class TracebackMode { MdExact, SynMultilinear, FiniteField };

struct TracebackConfig {
  TracebackMode mode = TracebackMode::MdExact;
  std::uint64_t q = 2;  // FiniteField only; prime
  std::uint64_t max_formula_size = 50'000'000;
  bool memoize = true;

  static TracebackConfig md() { return {}; }
  static TracebackConfig sm() { return {TracebackMode::SynMultilinear}; }
  static TracebackConfig finite_field(std::uint64_t p) { return {TracebackMode::FiniteField, p}; }
  /// Domain the emitted formula lives in.
  FieldSpec field() const;
};

struct TracebackTelemetry {
  std::size_t calls = 0;
  std::size_t z_reductions = 0;
  /// Largest per-variable occurrence count seen right after a z-reduction.
  std::uint64_t max_z_occurrence = 0;
  /// The cap that count is checked against (2^{k+1} or q^{k+1}).
  std::uint64_t z_occurrence_cap = 0;
  /// Largest number of distinct z-variables in any intermediate formula.
  std::size_t max_z_vars = 0;
  /// Max over results of log2(size) - (h * (3k^2 + 9k + 6) + k + 1).
  double size_bound_slack = -1e300;
  std::size_t size_bound_violations = 0;
  std::uint64_t output_size = 0;
};

/// How Algorithm 1 treats gate f at tree node t.
enum class Step { Leaf, Combine, ZLeaf, Descend };
struct Classified {
  Step step;
  NodeId child = kNoNode;  // Descend
};

/// Shared case dispatcher: Leaf for input/constant gates, Combine when every
/// input is in X_t, ZLeaf when no input lies in X_{<=t}, Descend into the
/// child whose subtree holds the inputs otherwise. Mixed cases throw.
class TracebackContext {
 public:
  TracebackContext(const Circuit& c, const TreeDecomposition& td);
  const Circuit& circuit() const { return c_; }
  const TreeDecomposition& td() const { return td_; }
  Classified classify(NodeId t, GateId f) const;
  bool below(NodeId t, Vertex v) const { return v < below_[t].size() && below_[t][v]; }
  std::string zname(GateId g) const { return "z_" + c_.gate(g).name; }

 private:
  const Circuit& c_;
  const TreeDecomposition& td_;
  std::vector<std::vector<bool>> below_;
};

struct TracebackHooks {
  /// Called with every computed Gamma_{t,f}.
  std::function<void(NodeId, GateId, const Formula&)> on_result;
  /// Called after every z-reduction with the per-variable occurrence counts.
  std::function<void(NodeId, GateId, const std::map<GateId, std::uint64_t>&)> on_z_reduce;
};

/// Algorithm 1 on a preprocessed pair (balanced, output in the root bag).
/// Returns the formula DAG for the output gate; no ZVar leaves remain.
Formula traceback_formula(const PreprocessedPair& p, const TracebackConfig& cfg,
                          TracebackTelemetry* telemetry = nullptr, const TracebackHooks* hooks = nullptr);
/// Same, unfolded into a tree-shaped Circuit (throws past max_formula_size).
Circuit traceback(const PreprocessedPair& p, const TracebackConfig& cfg, TracebackTelemetry* telemetry = nullptr);

/// The bag-local unfolding of Phi_{t,f} at a bag: inputs outside X_t become
/// ZVar leaves named z_<gate>. Throws if the bag exceeds `max_bag`.
Formula base_case_formula(const TracebackContext& ctx, NodeId t, GateId f, std::size_t max_bag);

/// Selector-sum rewrite making every z-variable occur a bounded number of
/// times: over the integers and GF(2) each occurs 2^m times, over GF(p)
/// p^m (p - 1) times, where m is the number of z-variables present.
Formula z_reduce(const Formula& f, const Algebra& alg);

/// Coefficient formulas of a z-multilinear formula, keyed by the set of
/// z-gates in the monomial; computed by signed inclusion-exclusion
/// coef(a) = sum over a' <= a of (-1)^{|a| - |a'|} f(a').
using ZStandardForm = std::map<std::set<GateId>, Formula>;
ZStandardForm standard_form(const Formula& f, const Algebra& alg);
/// Sum over a of (prod of zleaf[g], g in a) * f_a.
Formula from_standard_form(const ZStandardForm& sf, const std::map<GateId, Formula>& zleaf, const Algebra& alg);

/// The syntactically multilinear substitution step: drops identically zero
/// coefficients, drops monomials whose substituted formulas share a
/// variable, zeroes variables of substituted formulas inside coefficients,
/// then multiplies out. `subs` maps every z-gate of `gamma` to its formula.
Formula sm_substitute(const ZStandardForm& gamma, const std::map<GateId, Formula>& subs, const Algebra& alg);

/// Randomized zero test of an integer formula at random points modulo
/// 2^61 - 1. Fixed seed.
bool probably_zero(const Formula& f, const Algebra& alg, unsigned trials = 4);

/// Brent-style rebalancing to logarithmic depth. Keeps syntactic
/// multilinearity. Works for arithmetic and boolean formulas.
Formula brent_balance(const Formula& f, const Algebra& alg);

struct FlattenResult {
  Formula formula;
  PreprocessedPair pre;
  TracebackTelemetry telemetry;
};

/// Full pipeline: (sm_normalize,) balance_td, root_with_output, preprocess,
/// traceback.
FlattenResult flatten(const Circuit& c, const TreeDecomposition& td, const TracebackConfig& cfg,
                      const TracebackHooks* hooks = nullptr);

}  // namespace twf
