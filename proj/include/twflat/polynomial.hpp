#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "twflat/circuit.hpp"
#include "twflat/field.hpp"

namespace twf {

/// Product of variables with positive exponents, kept sorted by name.
class Monomial {
 public:
  Monomial() = default;
  static Monomial var(const std::string& name, unsigned exponent = 1);
  /// Multilinear monomial over the given names.
  static Monomial of(const std::set<std::string>& names);

  const std::vector<std::pair<std::string, unsigned>>& exponents() const { return exps_; }
  unsigned degree() const;
  unsigned exponent(const std::string& name) const;
  bool is_multilinear() const;
  bool empty() const { return exps_.empty(); }

  /// Factor restricted to (or with) the given variables removed.
  Monomial restricted_to(const std::set<std::string>& vars) const;
  Monomial without(const std::set<std::string>& vars) const;

  friend Monomial operator*(const Monomial& a, const Monomial& b);
  friend auto operator<=>(const Monomial&, const Monomial&) = default;
  friend bool operator==(const Monomial&, const Monomial&) = default;

  std::string to_string() const;

 private:
  std::vector<std::pair<std::string, unsigned>> exps_;
};

/// Graded lexicographic order: higher total degree first, then the monomial
/// with the larger exponent on the alphabetically first differing variable.
bool grlex_greater(const Monomial& a, const Monomial& b);

/// Exact expanded multivariate polynomial. No zero coefficients are stored;
/// with a modulus every coefficient lies in [0, modulus).
class SparsePolynomial {
 public:
  using Terms = std::map<Monomial, Int>;

  SparsePolynomial() = default;
  explicit SparsePolynomial(std::optional<std::uint64_t> modulus) : modulus_(modulus) {}
  static SparsePolynomial constant(const Int& c, std::optional<std::uint64_t> modulus = std::nullopt);
  static SparsePolynomial variable(const std::string& name, std::optional<std::uint64_t> modulus = std::nullopt);
  static SparsePolynomial zero_like(const SparsePolynomial& p) { return SparsePolynomial(p.modulus_); }

  const Terms& terms() const { return terms_; }
  std::optional<std::uint64_t> modulus() const { return modulus_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  bool is_multilinear() const;
  /// Multilinear in each of the given variables (exponent <= 1).
  bool is_multilinear_in(const std::set<std::string>& vars) const;
  std::set<std::string> variables() const;

  /// Adds c * m; keeps the invariants.
  void add_term(const Monomial& m, const Int& c);

  SparsePolynomial& operator+=(const SparsePolynomial& o);
  SparsePolynomial& operator-=(const SparsePolynomial& o);
  friend SparsePolynomial operator+(SparsePolynomial a, const SparsePolynomial& b) { return a += b; }
  friend SparsePolynomial operator-(SparsePolynomial a, const SparsePolynomial& b) { return a -= b; }
  friend SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b);
  SparsePolynomial scaled(const Int& c) const;

  /// Value at a point; missing variables are an error.
  Int evaluate(const std::map<std::string, Int>& point) const;
  /// Substitute values for some variables, leaving the rest symbolic.
  SparsePolynomial substitute(const std::map<std::string, Int>& point) const;
  /// Reduce coefficients modulo p (p prime), producing a GF(p) polynomial.
  SparsePolynomial reduced(std::uint64_t p) const;

  friend bool operator==(const SparsePolynomial& a, const SparsePolynomial& b) {
    return a.modulus_ == b.modulus_ && a.terms_ == b.terms_;
  }

  /// Canonical text: terms in descending grlex order, `coef*var^e*var`.
  std::string to_string() const;

 private:
  Int norm(const Int& c) const;
  Terms terms_;
  std::optional<std::uint64_t> modulus_;
};

inline constexpr std::size_t kDefaultTermBudget = 100000;

/// Exact expansion of the output polynomial. ZVar leaves are variables
/// named by their `variable` field. Throws BudgetExceeded past `term_budget`
/// terms in any intermediate, PreconditionError for boolean circuits.
SparsePolynomial expand(const Circuit& c, const FieldSpec& field, std::size_t term_budget = kDefaultTermBudget);

bool equiv_exact(const Circuit& a, const Circuit& b, const FieldSpec& field,
                 std::size_t term_budget = kDefaultTermBudget);

/// Randomized identity test over GF(p): false as soon as a random point
/// separates a and b. Requires p prime and p > 2 * max formal degree.
bool equiv_random(const Circuit& a, const Circuit& b, std::uint64_t p, unsigned trials, std::uint64_t seed = 1);

/// Stored coefficient of m (0 if absent).
Int coefficient(const SparsePolynomial& f, const Monomial& m);

/// Coefficient of the monomial m over the variables `zvars`, as a polynomial
/// in the remaining variables: sum of terms whose zvars-part equals m.
SparsePolynomial coefficient_poly(const SparsePolynomial& f, const Monomial& m, const std::set<std::string>& zvars);
/// Same, with zvars taken to be the variables of m.
SparsePolynomial coefficient_poly(const SparsePolynomial& f, const Monomial& m);

}  // namespace twf
