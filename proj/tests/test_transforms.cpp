#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"
#include "twflat/formula.hpp"
#include "twflat/generators.hpp"
#include "twflat/polynomial.hpp"
#include "twflat/transforms.hpp"

using namespace twf;
using twf::test::ckt;
using twf::test::td_valid;

namespace {

bool in_bag(const TreeDecomposition& td, NodeId t, Vertex v) {
  const auto& b = td.bag(t);
  return std::find(b.begin(), b.end(), v) != b.end();
}

// The structural property, checked from bag_below directly.
bool property_holds(const Circuit& c, const TreeDecomposition& td) {
  for (NodeId t = 0; t < td.node_count(); ++t) {
    auto below = bag_below(td, t);
    auto under = [&](Vertex v) { return std::binary_search(below.begin(), below.end(), v); };
    for (Vertex g : td.bag(t)) {
      const Gate& gate = c.gate(g);
      if (gate.arity() != 2) continue;
      GateId a = gate.input(0), b = gate.input(1);
      bool ia = in_bag(td, t, a), ib = in_bag(td, t, b);
      if (ia != ib) return false;
      if (!ia && under(a) != under(b)) return false;
    }
  }
  return true;
}

CircuitTd balanced_instance(std::uint64_t seed, bool boolean = false, std::size_t gates = 30) {
  GenOptions o;
  o.seed = seed;
  o.gates = gates;
  o.boolean = boolean;
  o.k = 2 + seed % 3;
  auto ct = random_circuit_td(o);
  ct.td = root_with_output(balance_td(graph_of(ct.circuit), ct.td), ct.circuit);
  return ct;
}

Formula random_gf2_formula(std::mt19937_64& rng, int depth, std::size_t vars) {
  if (depth == 0 || rng() % 5 == 0) {
    if (rng() % 6 == 0) return Formula::constant(Int(rng() % 2));
    return Formula::variable("x" + std::to_string(1 + rng() % vars));
  }
  Op op = rng() % 2 ? Op::Add : Op::Mul;
  return Formula::make(op, random_gf2_formula(rng, depth - 1, vars), random_gf2_formula(rng, depth - 1, vars));
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

}  // namespace

TEST_CASE("preprocess leaves good pairs alone") {
  Circuit c = ckt("input x\ninput y\ngate g add x y\noutput g\n");
  TreeDecomposition td({{1, 2, 3}}, {}, 0);
  auto p = preprocess(c, td);
  CHECK(write_circuit(p.circuit) == write_circuit(c));
  CHECK(check_preprocessed(p));
  CHECK(property_holds(p.circuit, p.td));
}

TEST_CASE("preprocess routes a stray input through a zero") {
  // g = g1 + g2 with g, g1 in the root bag and g2 only below
  Circuit c = ckt("input g1\ninput g2\ngate g add g1 g2\noutput g\n");
  TreeDecomposition td({{1, 3}, {1, 2, 3}}, {{0, 1}}, 0);
  REQUIRE(td_valid(graph_of(c), td));
  CHECK_FALSE(check_preprocessed(c, td));
  auto p = preprocess(c, td);
  CHECK(check_preprocessed(p));
  CHECK(property_holds(p.circuit, p.td));
  CHECK(td_valid(graph_of(p.circuit), p.td));
  CHECK(equiv_exact(c, p.circuit, FieldSpec::integers()));
  bool zero = false, routed = false;
  for (GateId g = 1; g <= p.circuit.size(); ++g) {
    const Gate& gate = p.circuit.gate(g);
    if (gate.op == Op::Const && gate.value == 0) zero = true;
    if (gate.op == Op::Add && gate.arity() == 2) {
      const Gate& a = p.circuit.gate(gate.input(0));
      const Gate& b = p.circuit.gate(gate.input(1));
      if ((a.op == Op::Const && b.variable == "g2") || (b.op == Op::Const && a.variable == "g2")) routed = true;
    }
  }
  CHECK(zero);
  CHECK(routed);
}

TEST_CASE("preprocess on random balanced pairs") {
  for (std::uint64_t s = 1; s <= 100; ++s) {
    auto ct = balanced_instance(s);
    std::size_t k = td_width(ct.td);
    auto p = preprocess(ct.circuit, ct.td);
    CHECK(check_preprocessed(p));
    CHECK(property_holds(p.circuit, p.td));
    CHECK(check_preprocessed(ct.circuit, ct.td) == property_holds(ct.circuit, ct.td));
    CHECK(td_valid(graph_of(p.circuit), p.td));
    CHECK(p.circuit.size() <= 2 * ct.circuit.size());
    CHECK(td_width(p.td) <= 3 * k + 2);
    CHECK(td_depth(p.td) == td_depth(ct.td));
    CHECK(equiv_exact(ct.circuit, p.circuit, FieldSpec::integers()));
    auto again = preprocess(p.circuit, p.td);
    CHECK(write_circuit(again.circuit) == write_circuit(p.circuit));
    REQUIRE(p.provenance.size() == p.circuit.size());
  }
}

TEST_CASE("arithmetize") {
  Circuit nx = ckt("input x\ngate n not x\noutput n\n");
  auto a = arithmetize(nx, TreeDecomposition({{1, 2}}, {}, 0));
  CHECK(evaluate(a.circuit, {{"x", 1}}, FieldSpec::gf2()) == 0);
  CHECK(evaluate(a.circuit, {{"x", 0}}, FieldSpec::gf2()) == 1);
  Circuit orc = ckt("input x\ninput y\ngate o or x y\noutput o\n");
  auto b = arithmetize(orc, TreeDecomposition({{1, 2, 3}}, {}, 0));
  CHECK(evaluate(b.circuit, {{"x", 1}, {"y", 1}}, FieldSpec::gf2()) == 1);
  CHECK_THROWS_AS(arithmetize(ckt("input x\ngate o add x x\noutput o\n"), TreeDecomposition({{1, 2}}, {}, 0)),
                  PreconditionError);

  for (std::uint64_t s = 1; s <= 200; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 25;
    o.boolean = true;
    o.max_vars = 8;
    auto ct = random_circuit_td(o);
    auto ar = arithmetize(ct.circuit, ct.td);
    CHECK(ar.circuit.kind() == CircuitKind::Arithmetic);
    CHECK(td_valid(graph_of(ar.circuit), ar.td));
    CHECK(td_width(ar.td) <= 3 * (td_width(ct.td) + 1) - 1);
    for (auto& x : twf::test::all_points(ct.circuit.variables()))
      CHECK(evaluate(ar.circuit, x, FieldSpec::gf2()) == evaluate(ct.circuit, x, FieldSpec::gf2()));
    if (ct.circuit.size() <= 13 && ar.circuit.size() <= 13)
      CHECK(exact_treewidth(graph_of(ar.circuit)).first <= 3 * (exact_treewidth(graph_of(ct.circuit)).first + 1));
  }
}

TEST_CASE("dearithmetize") {
  Formula x = Formula::variable("x"), y = Formula::variable("y");
  Formula sum = dearithmetize(Formula::make(Op::Add, x, y));
  CHECK(sum.op() == Op::Or);
  for (auto& p : twf::test::all_points({"x", "y"})) {
    Int want = (p["x"] + p["y"]) % 2;
    CHECK(evaluate(sum, p, FieldSpec::gf2(), true) == want);
  }
  Formula prod = dearithmetize(Formula::make(Op::Mul, x, y));
  CHECK(prod.op() == Op::And);
  CHECK(prod.child(0).var() == "x");
  CHECK_THROWS_AS(dearithmetize(Formula::make(Op::Add, x, Formula::constant(3))), PreconditionError);

  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    Formula f = random_gf2_formula(rng, 1 + i % 6, 1 + i % 8);
    Formula b = dearithmetize(f);
    CHECK(b.depth() <= 3 * f.depth() + 3);
    auto vars = names(1 + i % 8);
    for (auto& p : twf::test::all_points(vars))
      CHECK(evaluate(b, p, FieldSpec::gf2(), true) == evaluate(f, p, FieldSpec::gf2()));
    // and back again through arithmetize
    Circuit bc = to_circuit(b, CircuitKind::Boolean, 1u << 20);
    auto again = arithmetize(bc, TreeDecomposition({[&] {
                                                     std::vector<Vertex> all(bc.size());
                                                     for (std::size_t v = 0; v < all.size(); ++v) all[v] = v + 1;
                                                     return all;
                                                   }()},
                                                   {}, 0));
    for (auto& p : twf::test::all_points(bc.variables()))
      CHECK(evaluate(again.circuit, p, FieldSpec::gf2()) == evaluate(bc, p, FieldSpec::gf2()));
  }
}

TEST_CASE("reduce_fanout") {
  Circuit two = ckt("input x\ngate a add x x\noutput a\n");
  CHECK(write_circuit(reduce_fanout(two)) == write_circuit(two));
  Circuit four = ckt(
      "input x\ninput y\ngate a add x y\ngate b mul x y\ngate c add x y\ngate d mul x y\n"
      "gate e add a b\ngate f add c d\ngate o mul e f\noutput o\n");
  REQUIRE(four.is_leveled());
  Circuit r = reduce_fanout(four);
  CHECK(r.is_leveled());
  for (std::size_t f : r.fanout()) CHECK(f <= 2);
  CHECK(equiv_exact(four, r, FieldSpec::integers()));

  for (std::uint64_t s = 1; s <= 40; ++s) {
    LeveledOptions o;
    o.width = 2 + s % 4;
    o.levels = 5;
    o.seed = s;
    Circuit c = random_leveled(o);
    Circuit rf = reduce_fanout(c);
    for (std::size_t f : rf.fanout()) CHECK(f <= 2);
    CHECK(circuit_width(rf) <= 2 * o.width * o.width);
    CHECK(equiv_exact(c, rf, FieldSpec::integers()));
  }
}

TEST_CASE("md_transform") {
  Circuit formula = ckt("input x\ninput y\ngate o mul x y\noutput o\n");
  auto same = md_transform(formula);
  CHECK(write_circuit(same.circuit) == write_circuit(formula));

  Circuit tower = ckt("input x\ngate g1 mul x x\ngate g2 add g1 g1\noutput g2\n");
  REQUIRE(mult_chain_length(tower) == 1);
  CHECK(md_size_bound(3, 1) == 12);
  auto mt = md_transform(tower);
  CHECK(mt.circuit.size() <= 12);
  CHECK(is_multiplicatively_disjoint(mt.circuit));
  CHECK(equiv_exact(tower, mt.circuit, FieldSpec::integers()));

  for (std::uint64_t s = 1; s <= 100; ++s) {
    LeveledOptions o;
    o.width = 1 + s % 3;
    o.levels = 4 + s % 3;
    o.max_vars = 4;
    o.fanout2 = true;
    o.seed = s;
    Circuit c = random_leveled(o);
    std::size_t d = mult_chain_length(c);
    if (d > 2) continue;
    auto m = md_transform(c);
    CHECK(is_multiplicatively_disjoint(m.circuit));
    CHECK(equiv_exact(c, m.circuit, FieldSpec::integers()));
    CHECK(td_valid(graph_of(m.circuit), m.td));
    CHECK(td_width(m.td) <= 2 * circuit_width(c) - 1);
    CHECK(m.circuit.size() <= md_size_bound(c.size(), d));
  }
}

TEST_CASE("sm_normalize") {
  Circuit c = ckt(
      "input x\ninput y\nconst one 1\ngate g add one one\ngate a mul g x\ngate b mul g y\ngate o add a b\noutput o\n");
  std::vector<Vertex> all{1, 2, 3, 4, 5, 6, 7};
  auto n = sm_normalize(c, TreeDecomposition({all}, {}, 0));
  std::size_t twos = 0;
  for (const Gate& g : n.circuit.gates())
    if (g.op == Op::Const && g.value == 2) ++twos;
  CHECK(twos == 2);
  CHECK(n.circuit.fanout()[0] <= 1);
  CHECK(equiv_exact(c, n.circuit, FieldSpec::integers()));
  CHECK(is_multiplicatively_disjoint(n.circuit));

  Circuit novars = ckt("const a 2\nconst b 3\ngate s add a b\ngate m mul s s\noutput m\n");
  REQUIRE(is_syntactically_multilinear(novars));
  CHECK(is_multiplicatively_disjoint(sm_normalize(novars, TreeDecomposition({{1, 2, 3, 4}}, {}, 0)).circuit));

  CHECK_THROWS_AS(sm_normalize(ckt("input x\ngate m mul x x\noutput m\n"), TreeDecomposition({{1, 2}}, {}, 0)),
                  PreconditionError);

  for (std::uint64_t s = 1; s <= 100; ++s) {
    GenOptions o;
    o.seed = s;
    o.gates = 30;
    o.sm = true;
    auto ct = random_circuit_td(o);
    auto r = sm_normalize(ct.circuit, ct.td);
    CHECK(is_multiplicatively_disjoint(r.circuit));
    CHECK(is_syntactically_multilinear(r.circuit));
    CHECK(equiv_exact(ct.circuit, r.circuit, FieldSpec::integers()));
    CHECK(td_valid(graph_of(r.circuit), r.td));
    CHECK(td_width(r.td) <= td_width(ct.td));
  }
}
