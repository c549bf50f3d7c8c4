#include "twflat/traceback.hpp"

#include <cmath>
#include <random>
#include <unordered_map>

#include "twflat/analysis.hpp"
#include "twflat/error.hpp"

namespace twf {

FieldSpec TracebackConfig::field() const {
  return mode == TracebackMode::FiniteField ? FieldSpec::gfp(q) : FieldSpec::integers();
}

TracebackContext::TracebackContext(const Circuit& c, const TreeDecomposition& td)
    : c_(c), td_(td), below_(below_masks(td)) {}

Classified TracebackContext::classify(NodeId t, GateId f) const {
  const Gate& g = c_.gate(f);
  if (is_leaf(g.op)) return {Step::Leaf};
  std::size_t in_bag = 0, in_below = 0;
  for (GateId in : g.inputs()) {
    in_bag += td_.contains(t, in);
    in_below += below(t, in);
  }
  const std::size_t n = g.arity();
  if (in_bag == n) return {Step::Combine};
  if (in_bag != 0) throw PreconditionError("gate " + g.name + " has inputs both inside and outside bag " + std::to_string(t + 1));
  if (in_below == 0) return {Step::ZLeaf};
  if (in_below != n) throw PreconditionError("gate " + g.name + " has inputs both below and outside node " + std::to_string(t + 1));
  for (NodeId ch : td_.children(t)) {
    if (!below(ch, g.input(0))) continue;
    for (GateId in : g.inputs())
      if (!below(ch, in)) throw PreconditionError("inputs of gate " + g.name + " lie under different children");
    if (!td_.contains(ch, f)) throw PreconditionError("gate " + g.name + " missing from child bag");
    return {Step::Descend, ch};
  }
  throw PreconditionError("no child of node " + std::to_string(t + 1) + " holds the inputs of " + g.name);
}

namespace {

Formula leaf_formula(const Gate& g, const Algebra& alg) {
  switch (g.op) {
    case Op::Const:
      return alg.constant(g.value);
    default:
      return Formula::variable(g.variable);
  }
}

constexpr std::uint64_t kP61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t to_mod(const Int& v, std::uint64_t m) {
  Int r = mod_floor(v, Int(m));
  return static_cast<std::uint64_t>(r);
}

// Formula value modulo m with leaves drawn from `value`.
std::uint64_t eval_mod(const Formula& f, std::uint64_t m, const std::function<std::uint64_t(const Formula&)>& value) {
  std::unordered_map<const Formula::Node*, std::uint64_t> memo;
  std::function<std::uint64_t(const Formula&)> go = [&](const Formula& n) -> std::uint64_t {
    if (auto it = memo.find(n.id()); it != memo.end()) return it->second;
    std::uint64_t r;
    switch (n.op()) {
      case Op::Const:
        r = to_mod(n.value(), m);
        break;
      case Op::Input:
      case Op::ZVar:
        r = value(n);
        break;
      case Op::Add:
        r = n.arity() == 1 ? go(n.child(0)) : (go(n.child(0)) + go(n.child(1))) % m;
        break;
      case Op::Mul:
        r = mulmod(go(n.child(0)), go(n.child(1)), m);
        break;
      default:
        throw PreconditionError("eval_mod: boolean node");
    }
    memo.emplace(n.id(), r);
    return r;
  };
  return go(f);
}

std::set<std::string> all_vars(const Formula& f) {
  std::set<std::string> out = vars_of(f);
  for (GateId z : zvars_of(f)) out.insert("\x01" + std::to_string(z));
  return out;
}

Formula zero_vars(const Formula& f, const std::set<std::string>& vars, const Algebra& alg) {
  if (vars.empty()) return f;
  return replace_leaves(
      f,
      [&](const Formula& leaf) -> std::optional<Formula> {
        if (leaf.op() == Op::Input && vars.count(leaf.var())) return alg.constant(0);
        if (leaf.op() == Op::ZVar && vars.count("\x01" + std::to_string(leaf.ref()))) return alg.constant(0);
        return std::nullopt;
      },
      alg);
}

// Leaf nodes of the z-variables present, keyed by gate.
std::map<GateId, Formula> z_leaves(const Formula& f) {
  std::map<GateId, Formula> out;
  std::vector<Formula> stack{f};
  std::set<const Formula::Node*> seen;
  while (!stack.empty()) {
    Formula n = stack.back();
    stack.pop_back();
    if (!seen.insert(n.id()).second) continue;
    if (n.op() == Op::ZVar) out.emplace(n.ref(), n);
    for (std::size_t i = 0; i < n.arity(); ++i) stack.push_back(n.child(i));
  }
  return out;
}

Formula assign_z(const Formula& f, const std::map<GateId, Int>& vals, const Algebra& alg) {
  return replace_leaves(
      f,
      [&](const Formula& leaf) -> std::optional<Formula> {
        if (leaf.op() != Op::ZVar) return std::nullopt;
        auto it = vals.find(leaf.ref());
        if (it == vals.end()) return std::nullopt;
        return alg.constant(it->second);
      },
      alg);
}

}  // namespace

bool probably_zero(const Formula& f, const Algebra& alg, unsigned trials) {
  if (f.is_const()) return alg.field().reduce(f.value()) == 0;
  if (alg.field().is_finite()) throw PreconditionError("probably_zero: exact-integer formulas only");
  std::mt19937_64 rng(0x5eed);
  for (unsigned i = 0; i < trials; ++i) {
    std::map<std::string, std::uint64_t> point;
    auto value = [&](const Formula& leaf) {
      std::string key = leaf.op() == Op::ZVar ? "\x01" + std::to_string(leaf.ref()) : leaf.var();
      auto it = point.find(key);
      if (it != point.end()) return it->second;
      std::uint64_t v = rng() % kP61;
      point.emplace(key, v);
      return v;
    };
    if (eval_mod(f, kP61, value) != 0) return false;
  }
  return true;
}

Formula base_case_formula(const TracebackContext& ctx, NodeId t, GateId f, std::size_t max_bag) {
  if (ctx.td().bag(t).size() > max_bag)
    throw PreconditionError("base case: bag of size " + std::to_string(ctx.td().bag(t).size()) + " exceeds " +
                            std::to_string(max_bag));
  const Circuit& c = ctx.circuit();
  const Algebra alg(FieldSpec::integers());
  std::function<Formula(GateId)> unfold = [&](GateId g) -> Formula {
    const Gate& gate = c.gate(g);
    if (is_leaf(gate.op)) return leaf_formula(gate, alg);
    bool inside = true;
    for (GateId in : gate.inputs()) inside = inside && ctx.td().contains(t, in);
    if (!inside) return Formula::zvar(ctx.zname(g), g);
    if (gate.arity() == 1) return unfold(gate.input(0));
    return Formula::make(gate.op, unfold(gate.input(0)), unfold(gate.input(1)));
  };
  return unfold(f);
}

Formula z_reduce(const Formula& f, const Algebra& alg) {
  auto leaves = z_leaves(f);
  if (leaves.empty()) return f;
  std::vector<GateId> zs;
  for (const auto& [g, _] : leaves) zs.push_back(g);
  const auto mod = alg.field().modulus();
  const std::uint64_t q = (mod && *mod > 2) ? *mod : 2;
  // selector[b](z): 1 at z = b, 0 at the other domain points.
  auto selector = [&](const Formula& z, std::uint64_t b) {
    if (q == 2) return b ? z : alg.sub(alg.constant(1), z);
    std::vector<Formula> factors(q - 1, alg.add(z, alg.constant(Int(q - b))));
    return alg.add(alg.constant(1), alg.mul(alg.constant(Int(q - 1)), alg.product(factors)));
  };
  std::vector<Formula> terms;
  std::vector<std::uint64_t> b(zs.size(), 0);
  while (true) {
    std::map<GateId, Int> vals;
    for (std::size_t i = 0; i < zs.size(); ++i) vals[zs[i]] = Int(b[i]);
    Formula rest = assign_z(f, vals, alg);
    if (!rest.is_const(0)) {
      std::vector<Formula> factors;
      for (std::size_t i = 0; i < zs.size(); ++i) factors.push_back(selector(leaves.at(zs[i]), b[i]));
      factors.push_back(rest);
      terms.push_back(alg.product(factors));
    }
    std::size_t i = 0;
    while (i < b.size() && ++b[i] == q) b[i++] = 0;
    if (i == b.size()) break;
  }
  return alg.sum(terms);
}

ZStandardForm standard_form(const Formula& f, const Algebra& alg) {
  auto leaves = z_leaves(f);
  std::vector<GateId> zs;
  for (const auto& [g, _] : leaves) zs.push_back(g);
  const std::size_t m = zs.size();
  if (m > 20) throw PreconditionError("standard_form: too many z-variables");
  std::vector<Formula> at(std::size_t{1} << m);
  for (std::size_t mask = 0; mask < at.size(); ++mask) {
    std::map<GateId, Int> vals;
    for (std::size_t i = 0; i < m; ++i) vals[zs[i]] = (mask >> i) & 1;
    at[mask] = assign_z(f, vals, alg);
  }
  ZStandardForm out;
  for (std::size_t mask = 0; mask < at.size(); ++mask) {
    std::vector<Formula> terms;
    // Sub-masks a' of a, sign (-1)^{|a| - |a'|}.
    for (std::size_t sub = mask;; sub = (sub - 1) & mask) {
      int gap = __builtin_popcountll(mask) - __builtin_popcountll(sub);
      terms.push_back(gap % 2 ? alg.neg(at[sub]) : at[sub]);
      if (sub == 0) break;
    }
    Formula coef = alg.sum(terms);
    if (coef.is_const(0)) continue;
    std::set<GateId> key;
    for (std::size_t i = 0; i < m; ++i)
      if ((mask >> i) & 1) key.insert(zs[i]);
    out.emplace(std::move(key), coef);
  }
  return out;
}

Formula from_standard_form(const ZStandardForm& sf, const std::map<GateId, Formula>& zleaf, const Algebra& alg) {
  std::vector<Formula> terms;
  for (const auto& [a, coef] : sf) {
    std::vector<Formula> factors;
    for (GateId g : a) factors.push_back(zleaf.at(g));
    factors.push_back(coef);
    terms.push_back(alg.product(factors));
  }
  return alg.sum(terms);
}

Formula sm_substitute(const ZStandardForm& gamma, const std::map<GateId, Formula>& subs, const Algebra& alg) {
  std::map<GateId, std::set<std::string>> vars;
  for (const auto& [a, coef] : gamma)
    for (GateId g : a)
      if (!vars.count(g)) vars[g] = all_vars(subs.at(g));
  std::vector<Formula> terms;
  for (const auto& [a, coef] : gamma) {
    if (probably_zero(coef, alg)) continue;
    std::vector<GateId> zs(a.begin(), a.end());
    bool clash = false;
    for (std::size_t i = 0; i < zs.size() && !clash; ++i)
      for (std::size_t j = i + 1; j < zs.size() && !clash; ++j)
        for (const auto& v : vars[zs[i]])
          if (vars[zs[j]].count(v)) {
            clash = true;
            break;
          }
    if (clash) continue;
    std::set<std::string> used;
    std::vector<Formula> factors;
    for (GateId g : zs) {
      used.insert(vars[g].begin(), vars[g].end());
      factors.push_back(subs.at(g));
    }
    factors.push_back(zero_vars(coef, used, alg));
    terms.push_back(alg.product(factors));
  }
  return alg.sum(terms);
}

namespace {

class Engine {
 public:
  Engine(const PreprocessedPair& p, const TracebackConfig& cfg, TracebackTelemetry* tel, const TracebackHooks* hooks)
      : ctx_(p.circuit, p.td), cfg_(cfg), alg_(cfg.field()), tel_(tel), hooks_(hooks), heights_(p.td.heights()) {
    k_ = td_width(p.td);
    if (cfg.mode == TracebackMode::FiniteField && cfg.q > 2)
      occ_cap_ = std::pow(static_cast<double>(cfg.q), static_cast<double>(k_ + 1));
    else
      occ_cap_ = std::pow(2.0, static_cast<double>(k_ + 1));
    if (tel_) tel_->z_occurrence_cap = occ_cap_ > 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(occ_cap_);
  }

  Formula run(NodeId t, GateId f) {
    const std::pair<NodeId, GateId> key{t, f};
    if (cfg_.memoize)
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (tel_) ++tel_->calls;
    const Gate& g = ctx_.circuit().gate(f);
    Formula r;
    Classified cls = ctx_.classify(t, f);
    switch (cls.step) {
      case Step::Leaf:
        r = leaf_formula(g, alg_);
        break;
      case Step::ZLeaf:
        r = Formula::zvar(ctx_.zname(f), f);
        break;
      case Step::Combine: {
        if (ctx_.td().is_leaf(t)) {
          r = fold(base_case_formula(ctx_, t, f, k_ + 1));
          break;
        }
        std::vector<Formula> kids;
        for (GateId in : g.inputs()) kids.push_back(run(t, in));
        if (cfg_.mode == TracebackMode::SynMultilinear && g.op == Op::Mul) separate(kids[0], kids[1]);
        r = reduce(t, f, alg_.apply(g.op, kids));
        break;
      }
      case Step::Descend: {
        Formula gamma = run(cls.child, f);
        if (cfg_.mode == TracebackMode::SynMultilinear) {
          ZStandardForm sf = standard_form(gamma, alg_);
          ZStandardForm live;
          std::set<GateId> needed;
          for (auto& [a, coef] : sf)
            if (!probably_zero(coef, alg_)) {
              live.emplace(a, coef);
              needed.insert(a.begin(), a.end());
            }
          std::map<GateId, Formula> subs;
          for (GateId z : needed) subs.emplace(z, run(t, z));
          r = sm_substitute(live, subs, alg_);
        } else {
          std::map<GateId, Formula> subs;
          for (GateId z : zvars_of(gamma)) subs.emplace(z, run(t, z));
          r = substitute_z(gamma, subs, alg_);
        }
        r = reduce(t, f, r);
        break;
      }
    }
    for (GateId z : zvars_of(r))
      if (!ctx_.td().contains(t, z))
        throw Error("traceback: z-variable of gate " + ctx_.circuit().gate(z).name + " escapes bag " +
                    std::to_string(t + 1));
    if (r.tree_size() > cfg_.max_formula_size)
      throw BudgetExceeded("traceback: intermediate formula exceeds " + std::to_string(cfg_.max_formula_size) + " gates");
    if (tel_) {
      tel_->max_z_vars = std::max(tel_->max_z_vars, zvars_of(r).size());
      double bound = static_cast<double>(heights_[t]) * static_cast<double>(3 * k_ * k_ + 9 * k_ + 6) +
                     static_cast<double>(k_ + 1);
      double slack = std::log2(static_cast<double>(r.tree_size())) - bound;
      tel_->size_bound_slack = std::max(tel_->size_bound_slack, slack);
      if (slack > 0) ++tel_->size_bound_violations;
    }
    if (hooks_ && hooks_->on_result) hooks_->on_result(t, f, r);
    if (cfg_.memoize) memo_.emplace(key, r);
    return r;
  }

 private:
  // Re-fold a raw formula in the engine's domain.
  Formula fold(const Formula& f) const {
    return replace_leaves(
        f,
        [&](const Formula& leaf) -> std::optional<Formula> {
          if (leaf.op() == Op::Const) return alg_.constant(leaf.value());
          return std::nullopt;
        },
        alg_);
  }

  Formula reduce(NodeId t, GateId f, const Formula& r) {
    Formula out = z_reduce(r, alg_);
    auto occ = z_occurrences(out);
    std::uint64_t worst = 0;
    for (auto [z, n] : occ) worst = std::max(worst, n);
    if (static_cast<double>(worst) > occ_cap_)
      throw Error("traceback: z-variable occurs " + std::to_string(worst) + " times after reduction");
    if (tel_) {
      ++tel_->z_reductions;
      tel_->max_z_occurrence = std::max(tel_->max_z_occurrence, worst);
    }
    if (hooks_ && hooks_->on_z_reduce) hooks_->on_z_reduce(t, f, occ);
    return out;
  }

  // Zero shared variables on the side whose polynomial does not use them.
  void separate(Formula& a, Formula& b) const {
    auto va = all_vars(a), vb = all_vars(b);
    for (const auto& v : va) {
      if (!vb.count(v)) continue;
      std::set<std::string> one{v};
      Formula a0 = zero_vars(a, one, alg_);
      if (probably_zero(alg_.sub(a, a0), alg_)) {
        a = a0;
        continue;
      }
      Formula b0 = zero_vars(b, one, alg_);
      if (probably_zero(alg_.sub(b, b0), alg_)) {
        b = b0;
        continue;
      }
      throw PreconditionError("traceback: product of two polynomials sharing a variable");
    }
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<NodeId, GateId>& k) const {
      return std::hash<std::uint64_t>()((std::uint64_t{k.first} << 32) | k.second);
    }
  };

  TracebackContext ctx_;
  TracebackConfig cfg_;
  Algebra alg_;
  TracebackTelemetry* tel_;
  const TracebackHooks* hooks_;
  std::vector<std::size_t> heights_;
  std::size_t k_ = 0;
  double occ_cap_ = 0;
  std::unordered_map<std::pair<NodeId, GateId>, Formula, KeyHash> memo_;
};

}  // namespace

namespace {

class Balancer {
 public:
  explicit Balancer(const Algebra& alg) : alg_(alg) {}

  Formula run(const Formula& f) {
    const std::uint64_t n = f.tree_size();
    if (n <= 4 || f.depth() <= 2) return f;
    if (auto it = memo_.find(f.id()); it != memo_.end()) return it->second.second;
    std::vector<Formula> path{f};
    while (path.back().tree_size() * 3 > 2 * n) {
      const Formula& v = path.back();
      Formula next = v.child(0);
      if (v.arity() == 2 && v.child(1).tree_size() > next.tree_size()) next = v.child(1);
      path.push_back(next);
    }
    const Formula s = path.back();
    Formula out;
    if (alg_.is_boolean()) {
      // f = s ? p : q
      Formula p = alg_.constant(1), q = alg_.constant(0);
      for (std::size_t i = path.size() - 1; i-- > 0;) {
        const Formula& v = path[i];
        if (v.arity() == 1) {
          if (v.op() == Op::Not) {
            p = alg_.lnot(p);
            q = alg_.lnot(q);
          }
          continue;
        }
        const Formula w = sibling(v, path[i + 1]);
        if (v.op() == Op::And) {
          p = alg_.land(p, w);
          q = alg_.land(q, w);
        } else {
          p = alg_.lor(p, w);
          q = alg_.lor(q, w);
        }
      }
      Formula bs = run(s);
      out = alg_.lor(alg_.land(bs, run(p)), alg_.land(alg_.lnot(bs), run(q)));
    } else {
      // f = a * s + b
      Formula a = alg_.constant(1), b = alg_.constant(0);
      for (std::size_t i = path.size() - 1; i-- > 0;) {
        const Formula& v = path[i];
        if (v.arity() == 1) continue;
        const Formula w = sibling(v, path[i + 1]);
        if (v.op() == Op::Add) {
          b = alg_.add(b, w);
        } else {
          a = alg_.mul(a, w);
          b = alg_.mul(b, w);
        }
      }
      out = alg_.add(alg_.mul(run(a), run(s)), run(b));
    }
    if (out.depth() >= f.depth()) out = f;
    memo_.emplace(f.id(), std::pair{f, out});
    return out;
  }

 private:
  static Formula sibling(const Formula& v, const Formula& on_path) {
    return v.child(0).id() == on_path.id() ? v.child(1) : v.child(0);
  }

  Algebra alg_;
  // Keys hold their formula so a freed node's address is never reused.
  std::unordered_map<const Formula::Node*, std::pair<Formula, Formula>> memo_;
};

}  // namespace

Formula brent_balance(const Formula& f, const Algebra& alg) { return Balancer(alg).run(f); }

Formula traceback_formula(const PreprocessedPair& p, const TracebackConfig& cfg, TracebackTelemetry* telemetry,
                          const TracebackHooks* hooks) {
  const Circuit& c = p.circuit;
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("traceback: circuit is not arithmetic");
  if (cfg.max_formula_size == 0) throw PreconditionError("traceback: max_formula_size must be positive");
  if (p.td.node_count() == 0) throw PreconditionError("traceback: empty decomposition");
  auto rep = validate_td(graph_of(c), p.td);
  if (!rep.ok()) throw PreconditionError("traceback: invalid decomposition: " + rep.violations[0].message);
  if (!check_preprocessed(p)) throw PreconditionError("traceback: pair is not preprocessed");
  if (!p.td.contains(p.td.root(), c.output())) throw PreconditionError("traceback: output gate not in the root bag");
  if (cfg.mode == TracebackMode::MdExact && !is_multiplicatively_disjoint(c))
    throw PreconditionError("traceback: md mode needs a multiplicatively disjoint circuit");
  if (cfg.mode == TracebackMode::SynMultilinear &&
      (!is_syntactically_multilinear(c) || !is_multiplicatively_disjoint(c)))
    throw PreconditionError("traceback: sm mode needs an sm-normalized circuit");
  Engine e(p, cfg, telemetry, hooks);
  Formula out = e.run(p.td.root(), c.output());
  if (!zvars_of(out).empty()) throw Error("traceback: z-variables survive at the root");
  if (telemetry) telemetry->output_size = out.tree_size();
  return out;
}

Circuit traceback(const PreprocessedPair& p, const TracebackConfig& cfg, TracebackTelemetry* telemetry) {
  return to_circuit(traceback_formula(p, cfg, telemetry), CircuitKind::Arithmetic, cfg.max_formula_size);
}

FlattenResult flatten(const Circuit& c, const TreeDecomposition& td, const TracebackConfig& cfg,
                      const TracebackHooks* hooks) {
  auto rep = validate_td(graph_of(c), td);
  if (!rep.ok()) throw PreconditionError("flatten: invalid decomposition: " + rep.violations[0].message);
  CircuitTd in{c, td};
  if (cfg.mode == TracebackMode::SynMultilinear) {
    if (!is_syntactically_multilinear(c)) throw PreconditionError("flatten: circuit is not syntactically multilinear");
    in = sm_normalize(c, td);
  }
  TreeDecomposition bal = root_with_output(balance_td(graph_of(in.circuit), in.td), in.circuit);
  FlattenResult out{Formula(), preprocess(in.circuit, bal), {}};
  out.formula = traceback_formula(out.pre, cfg, &out.telemetry, hooks);
  return out;
}

}  // namespace twf
