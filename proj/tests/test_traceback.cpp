#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"
#include "twflat/formula.hpp"
#include "twflat/generators.hpp"
#include "twflat/polynomial.hpp"
#include "twflat/traceback.hpp"
#include "twflat/transforms.hpp"

using namespace twf;
using twf::test::ckt;

namespace {

const Algebra kZ{FieldSpec::integers()};

Formula zv(GateId g) { return Formula::zvar("z" + std::to_string(g), g); }
Formula xv(int i) { return Formula::variable("x" + std::to_string(i)); }

SparsePolynomial poly(const Formula& f) { return expand(f, FieldSpec::integers()); }

// Phi_{t,f} built straight from the definition: the part of the circuit
// inside X_{<=t} feeding f, where bag gates with both inputs outside
// X_{<=t} become placeholders.
Circuit phi(const PreprocessedPair& p, NodeId t, GateId f) {
  const Circuit& c = p.circuit;
  auto below = bag_below(p.td, t);
  auto under = [&](Vertex v) { return std::binary_search(below.begin(), below.end(), v); };
  const auto& bag = p.td.bag(t);
  CircuitBuilder b;
  std::map<GateId, GateId> id;
  std::function<GateId(GateId)> build = [&](GateId g) -> GateId {
    if (auto it = id.find(g); it != id.end()) return it->second;
    const Gate& gate = c.gate(g);
    GateId out;
    bool cut = gate.arity() > 0 && std::binary_search(bag.begin(), bag.end(), g) &&
               std::none_of(gate.inputs().begin(), gate.inputs().end(), under);
    if (cut) {
      out = b.zvar("z_" + gate.name, g);
    } else {
      std::vector<GateId> ins;
      for (GateId in : gate.inputs()) {
        REQUIRE(under(in));
        ins.push_back(build(in));
      }
      out = b.copy_gate(gate, ins);
    }
    return id[g] = out;
  };
  return b.build(build(f));
}

Formula random_x_formula(std::mt19937_64& rng, int depth) {
  if (depth == 0 || rng() % 4 == 0) {
    if (rng() % 5 == 0) return Formula::constant(Int(static_cast<long>(rng() % 7) - 3));
    return xv(1 + static_cast<int>(rng() % 3));
  }
  Op op = rng() % 2 ? Op::Add : Op::Mul;
  return Formula::make(op, random_x_formula(rng, depth - 1), random_x_formula(rng, depth - 1));
}

// Sum of terms (product of distinct z's) * (x formula): multilinear in z.
Formula random_z_multilinear(std::mt19937_64& rng, GateId zcount) {
  Formula f = Formula::constant(0);
  int terms = 1 + static_cast<int>(rng() % 6);
  for (int i = 0; i < terms; ++i) {
    Formula term = random_x_formula(rng, 2);
    for (GateId g = 1; g <= zcount; ++g)
      if (rng() % 2) term = Formula::make(Op::Mul, term, zv(g));
    f = Formula::make(Op::Add, f, term);
  }
  return f;
}

std::set<std::string> znames(GateId n) {
  std::set<std::string> s;
  for (GateId g = 1; g <= n; ++g) s.insert("z" + std::to_string(g));
  return s;
}

std::set<std::string> monomial_of(const std::set<GateId>& a) {
  std::set<std::string> s;
  for (GateId g : a) s.insert("z" + std::to_string(g));
  return s;
}

Formula left_chain(int leaves) {
  Formula f = xv(1);
  for (int i = 2; i <= leaves; ++i)
    f = Formula::make(Op::Add, f, Formula::variable("x" + std::to_string(i)));
  return f;
}

}  // namespace

TEST_CASE("traceback on small examples") {
  Circuit one = ckt("input x1\ninput x2\ngate o add x1 x2\noutput o\n");
  auto r = flatten(one, TreeDecomposition({{1, 2, 3}}, {}, 0), TracebackConfig::md());
  CHECK(poly(r.formula).to_string() == "x1 + x2");

  Circuit c = ckt("input x\ninput y\ninput z\ngate g add x y\ngate h mul g z\ngate o add g h\noutput o\n");
  TreeDecomposition path({{1, 2, 4}, {3, 4, 5}, {4, 5, 6}}, {{0, 1}, {1, 2}}, 2);
  auto rc = flatten(c, path, TracebackConfig::md());
  SparsePolynomial want = poly(Formula::make(Op::Add, Formula::make(Op::Add, Formula::variable("x"), Formula::variable("y")),
                                             Formula::make(Op::Mul,
                                                           Formula::make(Op::Add, Formula::variable("x"),
                                                                         Formula::variable("y")),
                                                           Formula::variable("z"))));
  CHECK(poly(rc.formula) == want);
  CHECK(zvars_of(rc.formula).empty());
  Circuit out = to_circuit(rc.formula, CircuitKind::Arithmetic, 1000);
  CHECK(out.is_formula());
  CHECK(rc.telemetry.size_bound_violations == 0);
}

TEST_CASE("traceback preconditions") {
  Circuit sq = ckt("input x\ngate g mul x x\noutput g\n");
  TreeDecomposition td({{1, 2}}, {}, 0);
  CHECK_THROWS_AS(flatten(sq, td, TracebackConfig::md()), PreconditionError);
  CHECK_THROWS_AS(flatten(sq, td, TracebackConfig::sm()), PreconditionError);
  CHECK_NOTHROW(flatten(sq, td, TracebackConfig::finite_field(2)));
  Circuit bad = ckt("input x\ninput y\ngate g add x y\noutput g\n");
  CHECK_THROWS_AS(flatten(bad, TreeDecomposition({{1, 3}}, {}, 0), TracebackConfig::md()), PreconditionError);
  CHECK_THROWS_AS(flatten(ckt("input a\ninput b\ngate o and a b\noutput o\n"), TreeDecomposition({{1, 2, 3}}, {}, 0),
                          TracebackConfig::finite_field(2)),
                  PreconditionError);
}

TEST_CASE("finite-field traceback agrees pointwise on non-md circuits") {
  Circuit c = ckt(
      "input x1\ninput x2\ninput x3\n"
      "gate a mul x1 x2\ngate b add a x3\ngate s mul b b\ngate t mul s a\ngate u add t b\noutput u\n");
  REQUIRE_FALSE(is_multiplicatively_disjoint(c));
  REQUIRE(c.size() == 8);
  auto full = [](std::size_t n) {
    std::vector<Vertex> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i + 1;
    return all;
  };
  for (std::uint64_t q : {2, 3, 5}) {
    auto r = flatten(c, TreeDecomposition({full(8)}, {}, 0), TracebackConfig::finite_field(q));
    for (auto& x : twf::test::all_points(c.variables(), q))
      CHECK(evaluate(r.formula, x, FieldSpec::gfp(q)) == evaluate(c, x, FieldSpec::gfp(q)));
  }
  for (std::uint64_t s = 1; s <= 40; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 20;
    o.max_vars = 6;
    auto ct = random_circuit_td(o);
    auto r = flatten(ct.circuit, ct.td, TracebackConfig::finite_field(2));
    CHECK(r.telemetry.max_z_occurrence <= r.telemetry.z_occurrence_cap);
    for (auto& x : twf::test::all_points(ct.circuit.variables()))
      CHECK(evaluate(r.formula, x, FieldSpec::gf2()) == evaluate(ct.circuit, x, FieldSpec::gf2()));
  }
}

TEST_CASE("every recursion result matches its subcircuit") {
  std::size_t checked = 0, with_z = 0;
  for (std::uint64_t s = 1; s <= 60; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 20;
    o.md = true;
    o.k = 2 + s % 2;
    auto ct = random_circuit_td(o);
    std::vector<std::tuple<NodeId, GateId, Formula>> seen;
    TracebackHooks hooks;
    hooks.on_result = [&](NodeId t, GateId f, const Formula& g) { seen.emplace_back(t, f, g); };
    auto r = flatten(ct.circuit, ct.td, TracebackConfig::md(), &hooks);
    REQUIRE(r.pre.circuit.size() <= 40);
    for (auto& [t, f, g] : seen) {
      Circuit sub = phi(r.pre, t, f);
      CHECK(poly(g) == expand(sub, FieldSpec::integers()));
      // placeholders only name gates of the current bag
      const auto& bag = r.pre.td.bag(t);
      for (GateId z : zvars_of(g)) CHECK(std::binary_search(bag.begin(), bag.end(), z));
      auto vs = vars_of(g);
      auto allowed = sub.variables();
      for (const auto& v : vs)
        if (v.rfind("z_", 0) != 0) CHECK(std::find(allowed.begin(), allowed.end(), v) != allowed.end());
      if (!zvars_of(g).empty()) ++with_z;
      ++checked;
    }
  }
  CHECK(checked > 500);
  CHECK(with_z > 0);
}

TEST_CASE("base case unfolding") {
  Circuit sq = ckt("input x1\ngate o mul x1 x1\noutput o\n");
  TreeDecomposition one({{1, 2}}, {}, 0);
  TracebackContext ctx(sq, one);
  Formula f = base_case_formula(ctx, 0, 2, 2);
  CHECK(f.tree_size() == 3);
  CHECK_THROWS_AS(base_case_formula(ctx, 0, 2, 1), PreconditionError);

  Circuit chain = ckt("input x\ngate a add x x\ngate b add a x\noutput b\n");
  TreeDecomposition whole({{1, 2, 3}}, {}, 0);
  TracebackContext cc(chain, whole);
  Formula fc = base_case_formula(cc, 0, 3, 3);
  CHECK(fc.op() == Op::Add);
  CHECK(fc.child(0).op() == Op::Add);
  CHECK(fc.child(1).var() == "x");

  for (std::uint64_t s = 1; s <= 40; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 4;
    o.k = 3;
    o.max_vars = 3;
    auto ct = random_circuit_td(o);
    std::vector<Vertex> all;
    for (GateId g = 1; g <= ct.circuit.size(); ++g) all.push_back(g);
    TreeDecomposition td({all}, {}, 0);
    TracebackContext tc(ct.circuit, td);
    Formula b = base_case_formula(tc, 0, ct.circuit.output(), 4);
    CHECK(b.tree_size() <= 16);
    CHECK(poly(b) == expand(ct.circuit, FieldSpec::integers()));
  }
}

TEST_CASE("z_reduce") {
  Formula z1 = zv(1);
  Formula r = z_reduce(z1, kZ);
  CHECK(poly(r) == poly(z1));
  Formula plain = Formula::make(Op::Add, xv(1), xv(2));
  CHECK(z_reduce(plain, kZ).id() == plain.id());

  // z1 five times, multilinear overall
  Formula five = Formula::make(
      Op::Add,
      Formula::make(Op::Add, Formula::make(Op::Mul, z1, xv(1)), Formula::make(Op::Mul, z1, xv(2))),
      Formula::make(Op::Add, Formula::make(Op::Mul, z1, xv(3)),
                    Formula::make(Op::Add, z1, Formula::make(Op::Mul, xv(1), z1))));
  REQUIRE(z_occurrences(five).at(1) == 5);
  Formula fr = z_reduce(five, kZ);
  CHECK(z_occurrences(fr).at(1) <= 2);
  CHECK(poly(fr) == poly(five));

  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    Formula f = random_z_multilinear(rng, 3);
    Formula g = z_reduce(f, kZ);
    CHECK(poly(g) == poly(f));
    for (auto [z, n] : z_occurrences(g)) CHECK(n <= 8);
  }
  for (std::uint64_t p : {3, 5}) {
    Algebra alg(FieldSpec::gfp(p));
    for (int i = 0; i < 10; ++i) {
      Formula f = random_z_multilinear(rng, 2);
      f = Formula::make(Op::Mul, f, zv(1));  // z1 may now appear squared
      Formula g = z_reduce(f, alg);
      for (auto [z, n] : z_occurrences(g)) CHECK(n <= p * p * (p - 1));
      std::vector<std::string> vars{"x1", "x2", "x3", "z1", "z2"};
      for (auto& x : twf::test::all_points(vars, p))
        CHECK(evaluate(g, x, FieldSpec::gfp(p)) == evaluate(f, x, FieldSpec::gfp(p)));
    }
  }
}

TEST_CASE("standard form coefficients match the oracle") {
  auto sf = standard_form(zv(1), kZ);
  CHECK(poly(sf.at({1})).to_string() == "1");
  Formula f = Formula::make(Op::Add, Formula::make(Op::Mul, zv(1), zv(2)), zv(1));
  auto sf2 = standard_form(f, kZ);
  CHECK(poly(sf2.at({1})).to_string() == "1");
  CHECK(poly(sf2.at({1, 2})).to_string() == "1");

  std::mt19937_64 rng(21);
  auto zs = znames(3);
  for (int i = 0; i < 200; ++i) {
    Formula g = random_z_multilinear(rng, 3);
    auto form = standard_form(g, kZ);
    SparsePolynomial full = poly(g);
    for (unsigned mask = 0; mask < 8; ++mask) {
      std::set<GateId> a;
      for (GateId z = 1; z <= 3; ++z)
        if (mask >> (z - 1) & 1) a.insert(z);
      SparsePolynomial want = coefficient_poly(full, Monomial::of(monomial_of(a)), zs);
      auto it = form.find(a);
      CHECK((it == form.end() ? want.is_zero() : poly(it->second) == want));
    }
    std::map<GateId, Formula> leaves{{1, zv(1)}, {2, zv(2)}, {3, zv(3)}};
    CHECK(poly(from_standard_form(form, leaves, kZ)) == full);
  }
}

TEST_CASE("syntactically multilinear substitution") {
  std::mt19937_64 rng(4);
  Formula gamma = Formula::make(Op::Add, Formula::make(Op::Mul, zv(1), zv(2)), Formula::make(Op::Mul, zv(2), xv(3)));
  std::map<GateId, Formula> disjoint{{1, xv(1)}, {2, Formula::make(Op::Add, xv(2), Formula::variable("x4"))}};
  Formula s1 = sm_substitute(standard_form(gamma, kZ), disjoint, kZ);
  CHECK(poly(s1) == poly(substitute_z(gamma, disjoint, kZ)));
  CHECK(is_syntactically_multilinear(s1));

  // z1*z2 appears twice with opposite signs; the substituted formulas share x1
  Formula cancel = Formula::make(
      Op::Add,
      Formula::make(Op::Add, Formula::make(Op::Mul, zv(1), zv(2)),
                    Formula::make(Op::Mul, Formula::constant(-1), Formula::make(Op::Mul, zv(2), zv(1)))),
      zv(1));
  std::map<GateId, Formula> shared{{1, xv(1)}, {2, Formula::make(Op::Add, xv(1), xv(2))}};
  Formula s2 = sm_substitute(standard_form(cancel, kZ), shared, kZ);
  CHECK(poly(s2) == poly(substitute_z(cancel, shared, kZ)));
  CHECK(poly(s2).to_string() == "x1");
  CHECK(is_syntactically_multilinear(s2));

  Formula zero = Formula::make(Op::Add, zv(1), Formula::make(Op::Mul, Formula::constant(-1), zv(1)));
  CHECK(poly(sm_substitute(standard_form(zero, kZ), {{1, xv(1)}}, kZ)).is_zero());
}

TEST_CASE("sm flatten keeps syntactic multilinearity") {
  for (std::uint64_t s = 1; s <= 40; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 30;
    o.sm = true;
    auto ct = random_circuit_td(o);
    auto r = flatten(ct.circuit, ct.td, TracebackConfig::sm());
    CHECK(is_syntactically_multilinear(r.formula));
    CHECK(poly(r.formula) == expand(ct.circuit, FieldSpec::integers()));
  }
}

TEST_CASE("brent balancing") {
  Formula chain = left_chain(64);
  REQUIRE(chain.depth() == 63);
  Formula b = brent_balance(chain, kZ);
  MESSAGE("64-leaf chain balanced to depth " << b.depth());
  CHECK(b.depth() <= 10 * std::log2(127.0) + 10);
  CHECK(b.depth() <= 4 * std::log2(127.0) + 4);
  CHECK(poly(b) == poly(chain));

  Formula flat = Formula::make(Op::Mul, Formula::make(Op::Add, xv(1), xv(2)), Formula::make(Op::Add, xv(3), xv(1)));
  CHECK(brent_balance(flat, kZ).depth() <= flat.depth());

  std::mt19937_64 rng(77);
  for (int i = 0; i < 60; ++i) {
    // a lopsided sm formula: each step multiplies by a fresh variable or adds
    Formula f = xv(1);
    for (int j = 2; j <= 40; ++j) {
      Formula x = Formula::variable("x" + std::to_string(j));
      f = rng() % 2 ? Formula::make(Op::Mul, f, Formula::make(Op::Add, x, Formula::constant(1)))
                    : Formula::make(Op::Add, x, f);
    }
    REQUIRE(is_syntactically_multilinear(f));
    Formula g = brent_balance(f, kZ);
    CHECK(is_syntactically_multilinear(g));
    CHECK(g.depth() <= 10 * std::log2(static_cast<double>(f.tree_size())) + 10);
    for (int k = 0; k < 10; ++k) {
      Assignment x;
      for (int j = 1; j <= 40; ++j) x["x" + std::to_string(j)] = static_cast<long>(rng() % 1000) - 500;
      CHECK(evaluate(g, x, FieldSpec::integers()) == evaluate(f, x, FieldSpec::integers()));
    }
  }

  Formula boolean = Formula::variable("x1");
  for (int j = 2; j <= 30; ++j) {
    Formula x = Formula::variable("x" + std::to_string(j));
    boolean = Formula::make(j % 3 ? Op::Or : Op::And, boolean, j % 4 ? x : Formula::make(Op::Not, x));
  }
  Formula bb = brent_balance(boolean, Algebra::boolean());
  CHECK(bb.depth() < boolean.depth());
  for (int i = 0; i < 300; ++i) {
    Assignment x;
    for (int j = 1; j <= 30; ++j) x["x" + std::to_string(j)] = rng() % 2;
    CHECK(evaluate(bb, x, FieldSpec::gf2(), true) == evaluate(boolean, x, FieldSpec::gf2(), true));
  }
}
