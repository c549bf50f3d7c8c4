#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twflat/analysis.hpp"
#include "twflat/circuit.hpp"
#include "twflat/field.hpp"
#include "twflat/polynomial.hpp"

namespace twf {

/// Immutable formula with shared subterms. Sizes and depths count the
/// unfolded tree, so sharing never hides blowup.
class Formula {
 public:
  struct Node {
    Op op;
    std::string variable;  // Input / ZVar
    GateId ref = kNoGate;  // ZVar: gate the placeholder stands for
    Int value;             // Const
    std::array<std::shared_ptr<const Node>, 2> kids;
    std::uint8_t arity = 0;
    std::uint64_t tree_size = 1;  // saturating
    std::uint32_t depth = 0;
  };

  Formula() = default;

  static Formula variable(const std::string& name);
  static Formula zvar(const std::string& name, GateId ref);
  static Formula constant(const Int& v);

  bool valid() const { return node_ != nullptr; }
  Op op() const { return node_->op; }
  std::size_t arity() const { return node_->arity; }
  Formula child(std::size_t i) const { return Formula(node_->kids.at(i)); }
  const std::string& var() const { return node_->variable; }
  GateId ref() const { return node_->ref; }
  const Int& value() const { return node_->value; }
  std::uint64_t tree_size() const { return node_->tree_size; }
  std::uint32_t depth() const { return node_->depth; }
  bool is_const() const { return node_->op == Op::Const; }
  bool is_const(long v) const { return is_const() && node_->value == v; }
  const Node* id() const { return node_.get(); }

  /// Raw node constructor without folding.
  static Formula make(Op op, const Formula& a, const Formula& b);
  static Formula make(Op op, const Formula& a);

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Folding constructors over a fixed domain: exact integers, GF(p), or the
/// boolean semiring of {0,1}.
class Algebra {
 public:
  explicit Algebra(const FieldSpec& f) : field_(f) {}
  static Algebra boolean() {
    Algebra a(FieldSpec::gf2());
    a.boolean_ = true;
    return a;
  }

  const FieldSpec& field() const { return field_; }
  bool is_boolean() const { return boolean_; }

  Formula constant(const Int& v) const;
  Formula add(const Formula& a, const Formula& b) const;
  Formula mul(const Formula& a, const Formula& b) const;
  /// a - b, as a + (-1) * b.
  Formula sub(const Formula& a, const Formula& b) const;
  Formula neg(const Formula& a) const;
  Formula land(const Formula& a, const Formula& b) const;
  Formula lor(const Formula& a, const Formula& b) const;
  Formula lnot(const Formula& a) const;
  /// Balanced sum / product; empty sum is 0, empty product 1.
  Formula sum(std::vector<Formula> xs) const;
  Formula product(std::vector<Formula> xs) const;
  /// Re-apply the gate's operator with folding.
  Formula apply(Op op, const std::vector<Formula>& kids) const;

 private:
  FieldSpec field_;
  bool boolean_ = false;
};

/// Formula DAG of a circuit's output (sharing mirrors the circuit's fan-out).
/// Pass-through gates are skipped.
Formula from_circuit(const Circuit& c);

/// Unfold into a tree-shaped Circuit. Throws BudgetExceeded if the tree has
/// more than max_size gates.
Circuit to_circuit(const Formula& f, CircuitKind kind, std::uint64_t max_size);

SparsePolynomial expand(const Formula& f, const FieldSpec& field, std::size_t term_budget = kDefaultTermBudget);

/// Value at a point; ZVar leaves are read from `a` by their variable name.
Int evaluate(const Formula& f, const Assignment& a, const FieldSpec& field, bool boolean = false);

/// Replace leaves for which `fn` returns a formula; rebuilds with folding.
Formula replace_leaves(const Formula& f, const std::function<std::optional<Formula>(const Formula&)>& fn,
                       const Algebra& alg);

/// Substitute formulas for ZVar leaves by referenced gate.
Formula substitute_z(const Formula& f, const std::map<GateId, Formula>& subs, const Algebra& alg);

/// Gates referenced by ZVar leaves.
std::set<GateId> zvars_of(const Formula& f);
/// Input variable names.
std::set<std::string> vars_of(const Formula& f);
/// Leaf occurrence count of every ZVar in the unfolded tree (saturating).
std::map<GateId, std::uint64_t> z_occurrences(const Formula& f);

/// Every Mul (And) node's operands use disjoint variable sets, ZVars included.
bool is_syntactically_multilinear(const Formula& f);

}  // namespace twf
