#include <doctest.h>

#include <functional>

#include "support.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"
#include "twflat/generators.hpp"
#include "twflat/polynomial.hpp"
#include "twflat/stats.hpp"

using namespace twf;
using twf::test::ckt;

namespace {

const char* kTower = "input x\ngate g1 mul x x\ngate g2 mul g1 g1\ngate g3 mul g2 g2\noutput g3\n";

// Reachability by DFS, reflexive.
std::vector<std::vector<bool>> reach_matrix(const Circuit& c) {
  std::size_t n = c.size();
  std::vector<std::vector<bool>> r(n + 1, std::vector<bool>(n + 1, false));
  auto cons = c.consumers();
  for (GateId a = 1; a <= n; ++a) {
    std::vector<GateId> stack{a};
    while (!stack.empty()) {
      GateId v = stack.back();
      stack.pop_back();
      if (r[a][v]) continue;
      r[a][v] = true;
      for (GateId w : cons[v - 1]) stack.push_back(w);
    }
  }
  return r;
}

// Longest sequence g0, g1..gm of Mul gates, each with both inputs reachable
// from its predecessor, by exhaustive search.
std::size_t brute_chain(const Circuit& c) {
  auto r = reach_matrix(c);
  std::size_t n = c.size(), best = 0;
  std::function<void(GateId, std::size_t)> extend = [&](GateId prev, std::size_t len) {
    best = std::max(best, len);
    for (GateId g = 1; g <= n; ++g) {
      const Gate& gate = c.gate(g);
      if (gate.op != Op::Mul) continue;
      if (r[prev][gate.input(0)] && r[prev][gate.input(1)]) extend(g, len + 1);
    }
  };
  for (GateId g0 = 1; g0 <= n; ++g0) extend(g0, 0);
  return best;
}

std::uint64_t recursive_degree(const Circuit& c, GateId g) {
  const Gate& gate = c.gate(g);
  if (gate.arity() == 0) return 1;
  if (gate.arity() == 1) return recursive_degree(c, gate.input(0));
  std::uint64_t a = recursive_degree(c, gate.input(0)), b = recursive_degree(c, gate.input(1));
  return gate.op == Op::Mul ? a + b : std::max(a, b);
}

}  // namespace

TEST_CASE("parse the smallest add circuit") {
  Circuit c = ckt("input x1\ninput x2\ngate g1 add x1 x2\noutput g1\n");
  CHECK(c.size() == 3);
  CHECK(c.gate(c.output()).name == "g1");
  CHECK(c.gate(3).op == Op::Add);
  CHECK(c.kind() == CircuitKind::Arithmetic);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_AS(ckt("input x1\ngate g1 add g1 x1\noutput g1\n"), ParseError);
  try {
    ckt("input x\n\ngate g1 frob x x\noutput g1\n");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(ckt("input x\ngate g add x y\noutput g\n"), ParseError);
  CHECK_THROWS_AS(ckt("input x\ngate g mul x\noutput g\n"), ParseError);
  CHECK(ckt("input x\ngate g add x\noutput g\n").gate(2).is_pass_through());
  CHECK_THROWS_AS(ckt("input x\ngate g add x x\n"), ParseError);
  CHECK_THROWS_AS(ckt("input x\ngate g add x x\ngate h and g g\noutput h\n"), ParseError);
}

TEST_CASE("round trip through the file format") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    GenOptions o;
    o.seed = s;
    o.boolean = s % 3 == 0;
    Circuit c = random_circuit_td(o).circuit;
    Circuit d = parse_circuit(write_circuit(c));
    REQUIRE(d.size() == c.size());
    CHECK(write_circuit(d) == write_circuit(c));
  }
}

TEST_CASE("shared subcircuits expand as the oracle predicts") {
  Circuit c = ckt(
      "input x\ninput y\ninput z\n"
      "gate a add x y\n"
      "gate b mul a z\n"
      "gate c add a b\n"
      "gate d mul c c\n"
      "output d\n");
  // (x+y)(1+z) squared
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    auto p = twf::test::random_point(c, rng, 50);
    Int v = (p["x"] + p["y"]) * (1 + p["z"]);
    CHECK(expand(c, FieldSpec::integers()).evaluate(p) == v * v);
  }
}

TEST_CASE("evaluate") {
  Circuit c = ckt("input x1\ninput x2\ngate s add x1 x2\ngate o mul s x1\noutput o\n");
  Assignment a{{"x1", 1}, {"x2", 1}};
  CHECK(evaluate(c, a, FieldSpec::gf2()) == 0);
  CHECK(evaluate(c, a, FieldSpec::integers()) == 2);
  CHECK_THROWS_AS(evaluate(c, {{"x1", 1}}, FieldSpec::integers()), Error);
  Circuit z = ckt("input x\nzvar z z_g\ngate o add x z\noutput o\n");
  CHECK_THROWS_AS(evaluate(z, {{"x", 1}, {"z_g", 1}}, FieldSpec::integers()), Error);
  CHECK(evaluate(z, {{"x", 1}, {"z_g", 2}}, FieldSpec::integers(), true) == 3);
}

TEST_CASE("evaluate agrees with the expansion and with a naive evaluator") {
  std::mt19937_64 rng(11);
  for (std::uint64_t s = 1; s <= 30; ++s) {
    GenOptions o;
    o.gates = 25;
    o.seed = s;
    o.k = 2 + s % 3;
    Circuit c = random_circuit_td(o).circuit;
    for (FieldSpec f : {FieldSpec::integers(), FieldSpec::gf2(), FieldSpec::gfp(10007)}) {
      SparsePolynomial p = expand(c, f);
      for (int i = 0; i < 5; ++i) {
        auto x = twf::test::random_point(c, rng, 1000);
        Int v = evaluate(c, x, f);
        CHECK(v == f.reduce(p.evaluate(x)));
        CHECK(v == twf::test::naive_eval(c, x, f.modulus().value_or(0)));
      }
    }
  }
}

TEST_CASE("boolean evaluation") {
  Circuit c = ckt("input a\ninput b\ngate n not a\ngate o or n b\ngate r and o a\noutput r\n");
  for (auto& x : twf::test::all_points({"a", "b"})) {
    Int want = (x["a"] == 1 && x["b"] == 1) ? 1 : 0;
    CHECK(evaluate(c, x, FieldSpec::gf2()) == want);
  }
}

TEST_CASE("formal degree") {
  CHECK(formal_degree(ckt("input x\noutput x\n")) == 1);
  CHECK(formal_degree(ckt(kTower)) == 8);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    GenOptions o;
    o.gates = 20;
    o.seed = s;
    Circuit c = random_circuit_td(o).circuit;
    std::uint64_t want = 0;
    for (GateId g = 1; g <= c.size(); ++g) want = std::max(want, recursive_degree(c, g));
    CHECK(formal_degree(c) == want);
  }
}

TEST_CASE("multiplication chains") {
  CHECK(mult_chain_length(ckt("input x\ninput y\ngate a add x y\ngate b mul a y\noutput b\n")) == 1);
  CHECK(mult_chain_length(ckt("input x\ninput y\ninput z\ngate a add x y\ngate b mul a z\noutput b\n")) == 0);
  CHECK(mult_chain_length(ckt("input x\ngate g1 mul x x\noutput g1\n")) == 1);
  CHECK(mult_chain_length(ckt(kTower)) == 3);
  CHECK_FALSE(is_multiplicatively_disjoint(ckt("input x\ngate g1 mul x x\noutput g1\n")));
  for (std::uint64_t s = 1; s <= 60; ++s) {
    GenOptions o;
    o.gates = 14;
    o.seed = s;
    o.k = 2 + s % 2;
    Circuit c = random_circuit_td(o).circuit;
    CHECK(mult_chain_length(c) == brute_chain(c));
    CHECK(is_multiplicatively_disjoint(c) == (brute_chain(c) == 0));
  }
}

TEST_CASE("syntactic multilinearity") {
  CHECK(is_syntactically_multilinear(ckt("input x1\ninput x2\ninput x3\ngate a add x1 x2\ngate b mul a x3\noutput b\n")));
  CHECK_FALSE(is_syntactically_multilinear(ckt("input x1\ninput x2\ngate a add x1 x2\ngate b mul a x1\noutput b\n")));
  for (std::uint64_t s = 1; s <= 40; ++s) {
    GenOptions o;
    o.gates = 20;
    o.seed = s;
    o.sm = s % 2;
    Circuit c = random_circuit_td(o).circuit;
    if (is_syntactically_multilinear(c)) CHECK(expand(c, FieldSpec::integers()).is_multilinear());
  }
}

TEST_CASE("circuit width") {
  CHECK(circuit_width(ckt("input x\ngate a add x x\ngate b mul a a\noutput b\n")) == 1);
  Circuit two = ckt(
      "input x\ninput y\n"
      "gate a1 add x x\ngate b1 add y y\n"
      "gate a2 add a1 a1\ngate b2 add b1 b1\n"
      "gate a3 add a2 a2\ngate b3 add b2 b2\n"
      "gate a4 add a3 a3\ngate b4 add b3 b3\n"
      "gate o add a4 b4\noutput o\n");
  CHECK(circuit_width(two) == 2);
}

TEST_CASE("proof tree coefficients") {
  Circuit c = ckt("input x1\nzvar z1 z1\ngate o mul z1 x1\noutput o\n");
  CHECK(proof_tree_coefficient(c, {"z1"}).to_string() == "x1");
  Circuit d = ckt("input x1\ninput x2\nzvar z1 z1\nzvar z2 z2\ngate a mul z1 x1\ngate b mul z2 x2\ngate o add a b\noutput o\n");
  CHECK(proof_tree_coefficient(d, {"z1"}).to_string() == "x1");
  CHECK(proof_tree_coefficient(d, {"z1", "z2"}).is_zero());

  // Random md circuits with two leaves turned into placeholders.
  int checked = 0;
  for (std::uint64_t s = 1; s <= 80 && checked < 30; ++s) {
    GenOptions o;
    o.gates = 12;
    o.seed = s;
    o.md = true;
    Circuit base = random_circuit_td(o).circuit;
    std::vector<GateId> leaves;
    for (GateId g = 1; g <= base.size(); ++g)
      if (base.gate(g).op == Op::Input) leaves.push_back(g);
    if (leaves.size() < 2) continue;
    CircuitBuilder b;
    std::vector<GateId> id(base.size() + 1);
    for (GateId g = 1; g <= base.size(); ++g) {
      const Gate& gate = base.gate(g);
      if (g == leaves[0] || g == leaves[1]) {
        id[g] = b.zvar("zz" + std::to_string(g));
      } else {
        std::vector<GateId> ins;
        for (GateId in : gate.inputs()) ins.push_back(id[in]);
        id[g] = b.copy_gate(gate, ins);
      }
    }
    Circuit c2 = b.build(id[base.output()]);
    if (!is_multiplicatively_disjoint(c2)) continue;
    SparsePolynomial full = expand(c2, FieldSpec::integers());
    std::set<std::string> zs{"zz" + std::to_string(leaves[0]), "zz" + std::to_string(leaves[1])};
    for (const auto& sub : std::vector<std::set<std::string>>{{}, {*zs.begin()}, {*zs.rbegin()}, zs})
      CHECK(proof_tree_coefficient(c2, sub) == coefficient_poly(full, Monomial::of(sub), zs));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("stats match direct recomputation") {
  for (std::uint64_t s = 1; s <= 100; ++s) {
    GenOptions o;
    o.gates = 14;
    o.seed = s;
    o.sm = s % 3 == 0;
    o.md = s % 3 == 1;
    auto ct = random_circuit_td(o);
    const Circuit& c = ct.circuit;
    StatsReport r = compute_stats(c, &ct.td);
    std::size_t n = c.size(), ops = 0;
    std::vector<std::size_t> depth(n + 1, 0);
    std::vector<std::set<std::string>> vars(n + 1);
    bool sm = true;
    for (GateId g = 1; g <= n; ++g) {
      const Gate& gate = c.gate(g);
      if (gate.arity() > 0) ++ops;
      if (gate.op == Op::Input || gate.op == Op::ZVar) vars[g] = {gate.variable};
      for (GateId in : gate.inputs()) {
        depth[g] = std::max(depth[g], depth[in] + 1);
        vars[g].insert(vars[in].begin(), vars[in].end());
      }
      if (gate.op == Op::Mul) {
        const auto& a = vars[gate.input(0)];
        const auto& b = vars[gate.input(1)];
        for (const auto& v : a)
          if (b.count(v)) sm = false;
      }
    }
    std::uint64_t deg = 0;
    for (GateId g = 1; g <= n; ++g) deg = std::max(deg, recursive_degree(c, g));
    std::size_t largest = 0;
    for (const auto& b : ct.td.bags()) largest = std::max(largest, b.size());
    CHECK(r.size_total == n);
    CHECK(r.size_ops == ops);
    CHECK(r.depth == depth[c.output()]);
    CHECK(r.formal_degree == deg);
    CHECK(r.mult_chain_length == brute_chain(c));
    CHECK(r.is_md == (brute_chain(c) == 0));
    CHECK(r.is_sm == sm);
    REQUIRE(r.td_width.has_value());
    CHECK(*r.td_width + 1 == largest);
    CHECK(r.td_depth == td_depth(ct.td));
    CHECK_FALSE(r.circuit_width.has_value() != c.is_leveled());
  }
}
