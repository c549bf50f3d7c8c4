#include "twflat/field.hpp"

#include "twflat/error.hpp"

namespace twf {

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

FieldSpec FieldSpec::gfp(std::uint64_t p) {
  if (!is_prime(p)) throw PreconditionError(std::to_string(p) + " is not prime");
  if (p == 2) return gf2();
  return FieldSpec(Kind::GFp, p);
}

Int FieldSpec::reduce(const Int& v) const {
  if (kind_ == Kind::Integer) return v;
  return mod_floor(v, Int(p_));
}

std::string FieldSpec::to_string() const {
  switch (kind_) {
    case Kind::GF2: return "GF(2)";
    case Kind::GFp: return "GF(" + std::to_string(p_) + ")";
    case Kind::Integer: return "Z";
  }
  return "?";
}

Int mod_floor(const Int& v, const Int& m) {
  Int r = v % m;
  if (r < 0) r += m;
  return r;
}

Int pow_mod(Int x, std::uint64_t e, const Int& m) {
  Int result = 1;
  x = mod_floor(x, m);
  while (e > 0) {
    if (e & 1) result = (result * x) % m;
    x = (x * x) % m;
    e >>= 1;
  }
  return result;
}

Int inv_mod(const Int& x, const Int& p) {
  // p prime: Fermat.
  return pow_mod(x, static_cast<std::uint64_t>(p) - 2, p);
}

}  // namespace twf
