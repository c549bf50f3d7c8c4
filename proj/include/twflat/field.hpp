#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace twf {

/// Exact integer used for constants and polynomial coefficients.
using Int = boost::multiprecision::cpp_int;

bool is_prime(std::uint64_t n);

/// Evaluation domain: GF(2), GF(p) or the integers.
class FieldSpec {
 public:
  enum class Kind { GF2, GFp, Integer };

  static FieldSpec gf2() { return FieldSpec(Kind::GF2, 2); }
  static FieldSpec gfp(std::uint64_t p);  // throws PreconditionError unless p is prime
  static FieldSpec integers() { return FieldSpec(Kind::Integer, 0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ != Kind::Integer; }
  /// Characteristic for finite fields, nullopt for the integers.
  std::optional<std::uint64_t> modulus() const {
    if (kind_ == Kind::Integer) return std::nullopt;
    return p_;
  }
  /// Canonical representative: [0, p) for finite fields, identity otherwise.
  Int reduce(const Int& v) const;
  std::string to_string() const;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;

 private:
  FieldSpec(Kind k, std::uint64_t p) : kind_(k), p_(p) {}
  Kind kind_;
  std::uint64_t p_;
};

/// Reduce v into [0, m) for m > 0.
Int mod_floor(const Int& v, const Int& m);

/// x^e mod m for m > 1.
Int pow_mod(Int x, std::uint64_t e, const Int& m);

/// Multiplicative inverse modulo a prime p.
Int inv_mod(const Int& x, const Int& p);

}  // namespace twf
