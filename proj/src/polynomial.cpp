#include "twflat/polynomial.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "twflat/analysis.hpp"
#include "twflat/error.hpp"

namespace twf {

Monomial Monomial::var(const std::string& name, unsigned exponent) {
  Monomial m;
  if (exponent > 0) m.exps_.push_back({name, exponent});
  return m;
}

Monomial Monomial::of(const std::set<std::string>& names) {
  Monomial m;
  for (const auto& n : names) m.exps_.push_back({n, 1});
  return m;
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (const auto& [_, e] : exps_) d += e;
  return d;
}

unsigned Monomial::exponent(const std::string& name) const {
  auto it = std::lower_bound(exps_.begin(), exps_.end(), name,
                             [](const auto& p, const std::string& n) { return p.first < n; });
  return (it != exps_.end() && it->first == name) ? it->second : 0;
}

bool Monomial::is_multilinear() const {
  return std::all_of(exps_.begin(), exps_.end(), [](const auto& p) { return p.second == 1; });
}

Monomial Monomial::restricted_to(const std::set<std::string>& vars) const {
  Monomial m;
  for (const auto& p : exps_)
    if (vars.count(p.first)) m.exps_.push_back(p);
  return m;
}

Monomial Monomial::without(const std::set<std::string>& vars) const {
  Monomial m;
  for (const auto& p : exps_)
    if (!vars.count(p.first)) m.exps_.push_back(p);
  return m;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  Monomial m;
  m.exps_.reserve(a.exps_.size() + b.exps_.size());
  auto i = a.exps_.begin(), j = b.exps_.begin();
  while (i != a.exps_.end() || j != b.exps_.end()) {
    if (j == b.exps_.end() || (i != a.exps_.end() && i->first < j->first)) {
      m.exps_.push_back(*i++);
    } else if (i == a.exps_.end() || j->first < i->first) {
      m.exps_.push_back(*j++);
    } else {
      m.exps_.push_back({i->first, i->second + j->second});
      ++i;
      ++j;
    }
  }
  return m;
}

std::string Monomial::to_string() const {
  std::string s;
  for (const auto& [v, e] : exps_) {
    if (!s.empty()) s += '*';
    s += v;
    if (e != 1) s += '^' + std::to_string(e);
  }
  return s;
}

bool grlex_greater(const Monomial& a, const Monomial& b) {
  if (a.degree() != b.degree()) return a.degree() > b.degree();
  const auto& x = a.exponents();
  const auto& y = b.exponents();
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i].first != y[i].first) return x[i].first < y[i].first;
    if (x[i].second != y[i].second) return x[i].second > y[i].second;
  }
  return x.size() > y.size();
}

Int SparsePolynomial::norm(const Int& c) const {
  if (!modulus_) return c;
  return mod_floor(c, Int(*modulus_));
}

SparsePolynomial SparsePolynomial::constant(const Int& c, std::optional<std::uint64_t> modulus) {
  SparsePolynomial p(modulus);
  p.add_term({}, c);
  return p;
}

SparsePolynomial SparsePolynomial::variable(const std::string& name, std::optional<std::uint64_t> modulus) {
  SparsePolynomial p(modulus);
  p.add_term(Monomial::var(name), 1);
  return p;
}

unsigned SparsePolynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, _] : terms_) d = std::max(d, m.degree());
  return d;
}

bool SparsePolynomial::is_multilinear() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.is_multilinear(); });
}

bool SparsePolynomial::is_multilinear_in(const std::set<std::string>& vars) const {
  for (const auto& [m, _] : terms_)
    for (const auto& [v, e] : m.exponents())
      if (e > 1 && vars.count(v)) return false;
  return true;
}

std::set<std::string> SparsePolynomial::variables() const {
  std::set<std::string> out;
  for (const auto& [m, _] : terms_)
    for (const auto& [v, e] : m.exponents()) out.insert(v);
  return out;
}

void SparsePolynomial::add_term(const Monomial& m, const Int& c) {
  Int v = norm(c);
  if (v == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, v);
  if (!inserted) {
    it->second = norm(it->second + v);
    if (it->second == 0) terms_.erase(it);
  }
}

SparsePolynomial& SparsePolynomial::operator+=(const SparsePolynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

SparsePolynomial& SparsePolynomial::operator-=(const SparsePolynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b) {
  SparsePolynomial r(a.modulus_ ? a.modulus_ : b.modulus_);
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
  return r;
}

SparsePolynomial SparsePolynomial::scaled(const Int& c) const {
  SparsePolynomial r(modulus_);
  for (const auto& [m, v] : terms_) r.add_term(m, v * c);
  return r;
}

Int SparsePolynomial::evaluate(const std::map<std::string, Int>& point) const {
  Int total = 0;
  for (const auto& [m, c] : terms_) {
    Int t = c;
    for (const auto& [v, e] : m.exponents()) {
      auto it = point.find(v);
      if (it == point.end()) throw PreconditionError("missing value for variable " + v);
      t *= boost::multiprecision::pow(it->second, e);
      if (modulus_) t = mod_floor(t, Int(*modulus_));
    }
    total += t;
  }
  return norm(total);
}

SparsePolynomial SparsePolynomial::substitute(const std::map<std::string, Int>& point) const {
  SparsePolynomial r(modulus_);
  for (const auto& [m, c] : terms_) {
    Int t = c;
    Monomial rest;
    for (const auto& [v, e] : m.exponents()) {
      auto it = point.find(v);
      if (it == point.end()) rest = rest * Monomial::var(v, e);
      else t *= boost::multiprecision::pow(it->second, e);
    }
    r.add_term(rest, t);
  }
  return r;
}

SparsePolynomial SparsePolynomial::reduced(std::uint64_t p) const {
  SparsePolynomial r(p);
  for (const auto& [m, c] : terms_) r.add_term(m, c);
  return r;
}

std::string SparsePolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::vector<const Terms::value_type*> order;
  for (const auto& t : terms_) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return grlex_greater(a->first, b->first); });
  std::ostringstream os;
  bool first = true;
  for (const auto* t : order) {
    Int c = t->second;
    bool neg = c < 0;
    if (neg) c = -c;
    if (first) os << (neg ? "-" : "");
    else os << (neg ? " - " : " + ");
    first = false;
    if (t->first.empty()) {
      os << c;
    } else {
      if (c != 1) os << c << '*';
      os << t->first.to_string();
    }
  }
  return os.str();
}

SparsePolynomial expand(const Circuit& c, const FieldSpec& field, std::size_t term_budget) {
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("expand needs an arithmetic circuit");
  auto mod = field.modulus();
  auto cone = c.output_cone();
  std::vector<SparsePolynomial> poly(c.size());
  for (GateId id = 1; id <= c.size(); ++id) {
    if (!cone[id - 1]) continue;
    const Gate& g = c.gate(id);
    SparsePolynomial p(mod);
    switch (g.op) {
      case Op::Input:
      case Op::ZVar: p = SparsePolynomial::variable(g.variable, mod); break;
      case Op::Const: p = SparsePolynomial::constant(g.value, mod); break;
      case Op::Add:
        p = poly[g.input(0) - 1];
        if (g.arity() == 2) p += poly[g.input(1) - 1];
        break;
      case Op::Mul: {
        const auto& l = poly[g.input(0) - 1];
        const auto& r = poly[g.input(1) - 1];
        if (l.term_count() * r.term_count() > term_budget * 64 && l.term_count() > 0)
          throw BudgetExceeded("expansion term budget exceeded");
        p = l * r;
        break;
      }
      default: throw PreconditionError("expand needs an arithmetic circuit");
    }
    if (p.term_count() > term_budget) throw BudgetExceeded("expansion term budget exceeded");
    poly[id - 1] = std::move(p);
  }
  return poly[c.output() - 1];
}

bool equiv_exact(const Circuit& a, const Circuit& b, const FieldSpec& field, std::size_t term_budget) {
  return expand(a, field, term_budget) == expand(b, field, term_budget);
}

bool equiv_random(const Circuit& a, const Circuit& b, std::uint64_t p, unsigned trials, std::uint64_t seed) {
  if (!is_prime(p)) throw PreconditionError(std::to_string(p) + " is not prime");
  std::uint64_t deg = std::max(formal_degree(a), formal_degree(b));
  if (Int(2) * deg >= Int(p))
    throw PreconditionError("p = " + std::to_string(p) + " too small for formal degree " + std::to_string(deg));
  FieldSpec field = FieldSpec::gfp(p);
  std::set<std::string> vars;
  for (const Circuit* c : {&a, &b})
    for (const Gate& g : c->gates())
      if (g.op == Op::Input || g.op == Op::ZVar) vars.insert(g.variable);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> dist(0, p - 1);
  for (unsigned t = 0; t < trials; ++t) {
    Assignment point;
    for (const auto& v : vars) point[v] = Int(dist(rng));
    if (evaluate(a, point, field, true) != evaluate(b, point, field, true)) return false;
  }
  return true;
}

Int coefficient(const SparsePolynomial& f, const Monomial& m) {
  auto it = f.terms().find(m);
  return it == f.terms().end() ? Int(0) : it->second;
}

SparsePolynomial coefficient_poly(const SparsePolynomial& f, const Monomial& m, const std::set<std::string>& zvars) {
  SparsePolynomial r(f.modulus());
  for (const auto& [mono, c] : f.terms())
    if (mono.restricted_to(zvars) == m) r.add_term(mono.without(zvars), c);
  return r;
}

SparsePolynomial coefficient_poly(const SparsePolynomial& f, const Monomial& m) {
  std::set<std::string> zvars;
  for (const auto& [v, _] : m.exponents()) zvars.insert(v);
  return coefficient_poly(f, m, zvars);
}

}  // namespace twf
