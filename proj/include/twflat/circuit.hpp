#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "twflat/field.hpp"

namespace twf {

/// Dense 1-based gate index; file order defines the numbering.
using GateId = std::uint32_t;
inline constexpr GateId kNoGate = 0;

enum class Op : std::uint8_t { Input, ZVar, Const, Add, Mul, And, Or, Not };
enum class CircuitKind { Arithmetic, Boolean };

std::string_view op_name(Op op);
bool is_leaf(Op op);

class Gate {
 public:
  Op op = Op::Input;
  std::string name;
  /// Input: the variable it reads. ZVar: the placeholder variable name.
  std::string variable;
  /// ZVar: the gate of the source circuit the placeholder stands for.
  GateId ref = kNoGate;
  Int value;  // Const only

  std::span<const GateId> inputs() const { return {in_.data(), arity_}; }
  std::size_t arity() const { return arity_; }
  GateId input(std::size_t i) const { return in_[i]; }
  /// Fan-in-1 Add/Or: forwards its single input unchanged.
  bool is_pass_through() const { return arity_ == 1 && (op == Op::Add || op == Op::Or); }

 private:
  friend class CircuitBuilder;
  friend class Circuit;
  std::array<GateId, 2> in_{kNoGate, kNoGate};
  std::uint8_t arity_ = 0;
};

/// Immutable fan-in-<=2 gate DAG with one designated output.
///
/// Gates are stored in topological order; every gate's inputs have smaller
/// ids. Arithmetic circuits use Input/ZVar/Const/Add/Mul, boolean ones
/// Input/Const/And/Or/Not. Fan-in-1 Add (arithmetic) and Or (boolean) gates
/// are identity pass-throughs. Levels are inferred on construction: a circuit
/// is leveled when every edge can be assigned to go from level i to i + 1.
class Circuit {
 public:
  Circuit() = default;

  CircuitKind kind() const { return kind_; }
  std::size_t size() const { return gates_.size(); }
  /// Number of non-leaf gates.
  std::size_t size_ops() const;
  GateId output() const { return output_; }
  const Gate& gate(GateId id) const { return gates_.at(id - 1); }
  const std::vector<Gate>& gates() const { return gates_; }

  std::optional<GateId> find(std::string_view name) const;
  /// Distinct Input variable names in first-appearance order.
  std::vector<std::string> variables() const;

  bool is_leveled() const { return levels_.has_value(); }
  /// Level per gate (index id - 1); throws PreconditionError if not leveled.
  const std::vector<int>& levels() const;
  int level(GateId id) const { return levels().at(id - 1); }
  /// Gates grouped by level.
  std::vector<std::vector<GateId>> level_sets() const;

  /// Out-degree per gate (index id - 1); a gate using x twice counts twice.
  std::vector<std::size_t> fanout() const;
  /// Consumers of each gate, with multiplicity.
  std::vector<std::vector<GateId>> consumers() const;
  /// Gates reaching the output, as a membership mask (index id - 1).
  std::vector<bool> output_cone() const;

  bool is_formula() const;

 private:
  friend class CircuitBuilder;
  void validate() const;
  void infer_levels();

  CircuitKind kind_ = CircuitKind::Arithmetic;
  std::vector<Gate> gates_;
  GateId output_ = kNoGate;
  std::optional<std::vector<int>> levels_;
  std::unordered_map<std::string, GateId> by_name_;
};

/// Incremental construction of a Circuit; validation happens in build().
class CircuitBuilder {
 public:
  explicit CircuitBuilder(CircuitKind kind = CircuitKind::Arithmetic) : kind_(kind) {}

  GateId input(const std::string& variable, const std::string& name = {});
  GateId zvar(const std::string& variable, GateId ref = kNoGate, const std::string& name = {});
  GateId constant(const Int& value, const std::string& name = {});
  GateId binary(Op op, GateId a, GateId b, const std::string& name = {});
  GateId unary(Op op, GateId a, const std::string& name = {});
  /// Copy gate g of c with inputs remapped by ins (must match arity).
  GateId copy_gate(const Gate& g, std::span<const GateId> ins, const std::string& name = {});

  GateId add(GateId a, GateId b) { return binary(Op::Add, a, b); }
  GateId mul(GateId a, GateId b) { return binary(Op::Mul, a, b); }

  std::size_t size() const { return gates_.size(); }
  const Gate& gate(GateId id) const { return gates_.at(id - 1); }
  bool has_name(const std::string& name) const { return names_.count(name) != 0; }

  /// Finalize. Explicit levels override inference but are validated.
  Circuit build(GateId output, std::optional<std::vector<int>> levels = std::nullopt) const;

 private:
  GateId push(Gate g, const std::string& name);
  std::string fresh_name(const std::string& wanted);

  CircuitKind kind_;
  std::vector<Gate> gates_;
  std::unordered_set<std::string> names_;
};

/// Levels assigned by edge constraints, each weakly connected component
/// shifted to start at 0; nullopt when inconsistent.
std::optional<std::vector<int>> infer_levels(const Circuit& c);

}  // namespace twf
