// twflat: command-line front end.
//
// Exit codes: 0 success / true, 1 false decision (equiv, reach, validate),
// 2 input or usage errors.

#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twflat/analysis.hpp"
#include "twflat/circuit_io.hpp"
#include "twflat/error.hpp"
#include "twflat/formula.hpp"
#include "twflat/generators.hpp"
#include "twflat/polynomial.hpp"
#include "twflat/reach.hpp"
#include "twflat/stats.hpp"
#include "twflat/td_io.hpp"
#include "twflat/traceback.hpp"
#include "twflat/transforms.hpp"
#include "twflat/width_sim.hpp"

using json = nlohmann::json;
using namespace twf;

namespace {

constexpr std::uint64_t kRandomPrime = 2147483647;  // 2^31 - 1

struct Common {
  std::string out;
  std::string td_out;
  bool json = false;
  bool telemetry = false;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

FieldSpec field_of(std::uint64_t p) {
  if (p == 0) return FieldSpec::integers();
  return FieldSpec::gfp(p);
}

json stats_json(const StatsReport& s) {
  json j;
  j["size_ops"] = s.size_ops;
  j["size_total"] = s.size_total;
  j["depth"] = s.depth;
  j["formal_degree"] = s.formal_degree;
  j["mult_chain_length"] = s.mult_chain_length;
  j["is_md"] = s.is_md;
  j["is_sm"] = s.is_sm;
  if (s.circuit_width) j["circuit_width"] = *s.circuit_width;
  if (s.td_width) j["td_width"] = *s.td_width;
  if (s.td_depth) j["td_depth"] = *s.td_depth;
  return j;
}

json traceback_json(const TracebackTelemetry& t) {
  return {{"calls", t.calls},
          {"z_reductions", t.z_reductions},
          {"max_z_occurrence", t.max_z_occurrence},
          {"z_occurrence_cap", t.z_occurrence_cap},
          {"max_z_vars", t.max_z_vars},
          {"size_bound_slack_log2", t.size_bound_slack},
          {"size_bound_violations", t.size_bound_violations},
          {"output_size", t.output_size}};
}

json frame_json(const FrameTelemetry& t) {
  return {{"k", t.budget.k},
          {"frame_bit_cap", t.budget.max_bits()},
          {"frame_z_var_cap", t.budget.max_z_vars()},
          {"frames", t.frames},
          {"max_live_frames", t.max_live_frames},
          {"max_frame_bits", t.max_frame_bits},
          {"max_frame_z_vars", t.max_frame_z_vars},
          {"max_monomials", t.max_monomials}};
}

// A circuit file, or a `.gr` graph when the path says so.
Graph graph_input(const std::string& path, bool directed) {
  if (ends_with(path, ".gr")) return read_graph_file(path, directed);
  return graph_of(read_circuit_file(path));
}

TracebackConfig mode_config(const std::vector<std::string>& mode, std::uint64_t field) {
  if (mode.empty() || mode[0] == "md") return TracebackConfig::md();
  if (mode[0] == "sm") return TracebackConfig::sm();
  if (mode[0] == "gf2") return TracebackConfig::finite_field(2);
  if (mode[0] == "gfp") {
    std::uint64_t p = field;
    if (mode.size() > 1) p = std::stoull(mode[1]);
    if (p == 0) throw PreconditionError("--mode gfp needs a prime");
    return TracebackConfig::finite_field(p);
  }
  throw PreconditionError("unknown mode " + mode[0]);
}

std::uint64_t seed_or_draw(CLI::Option* opt, std::uint64_t seed) {
  if (opt->count()) return seed;
  std::uint64_t s = std::random_device{}();
  std::cerr << "seed: " << s << "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-treewidth circuits to formulas and small-width circuits"};
  app.require_subcommand(1);
  Common co;
  std::uint64_t field = 0, seed = 1, max_size = 50'000'000;
  unsigned trials = 20;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("-o,--out", co.out, "output file (default stdout)");
  };

  // validate
  std::string f1, f2, f3, f4;
  bool directed = false;
  auto* validate = app.add_subcommand("validate", "check a circuit file, optionally with a decomposition");
  validate->add_option("file", f1, "circuit or .gr graph")->required();
  validate->add_option("td", f2, "tree decomposition");
  validate->add_flag("--directed", directed, "read .gr edges as directed");

  auto* stats = app.add_subcommand("stats", "circuit metrics");
  stats->add_option("circuit", f1)->required();
  stats->add_option("td", f2);
  stats->add_flag("--json", co.json);

  auto* expand_cmd = app.add_subcommand("expand", "expand the output polynomial");
  expand_cmd->add_option("circuit", f1)->required();
  expand_cmd->add_option("--field", field, "prime p for GF(p); integers by default");
  expand_cmd->add_option("--max-size", max_size, "term budget");

  std::string method = "expand";
  auto* equiv = app.add_subcommand("equiv", "decide polynomial equality");
  equiv->add_option("a", f1)->required();
  equiv->add_option("b", f2)->required();
  equiv->add_option("--method", method)->check(CLI::IsMember({"expand", "random"}));
  equiv->add_option("--field", field, "prime p (expand: GF(p); random: evaluation prime)");
  equiv->add_option("--trials", trials);
  auto* equiv_seed = equiv->add_option("--seed", seed);
  equiv->add_option("--max-size", max_size, "term budget for expand");

  bool force = false;
  auto* balance = app.add_subcommand("balance-td", "binary decomposition of logarithmic depth");
  balance->add_option("input", f1, "circuit or .gr graph")->required();
  balance->add_option("td", f2)->required();
  balance->add_flag("--force", force, "rebuild even if already balanced");
  balance->add_flag("--directed", directed);
  add_out(balance);

  auto* pre = app.add_subcommand("preprocess", "make every bag hold both or neither input of its gates");
  pre->add_option("circuit", f1)->required();
  pre->add_option("td", f2)->required();
  add_out(pre);
  pre->add_option("--td-out", co.td_out)->required();

  std::vector<std::string> mode{"md"};
  auto* flatten_cmd = app.add_subcommand("flatten", "circuit to formula");
  flatten_cmd->add_option("circuit", f1)->required();
  flatten_cmd->add_option("td", f2)->required();
  flatten_cmd->add_option("--mode", mode, "md | sm | gf2 | gfp <p>")->expected(1, 2);
  flatten_cmd->add_option("--field", field, "prime for --mode gfp");
  flatten_cmd->add_option("--max-size", max_size, "formula size guard");
  flatten_cmd->add_flag("--telemetry", co.telemetry, "print traceback telemetry as JSON");
  add_out(flatten_cmd);

  auto* brent = app.add_subcommand("brent", "rebalance a formula to logarithmic depth");
  brent->add_option("formula", f1)->required();
  brent->add_option("--field", field);
  brent->add_option("--max-size", max_size);
  add_out(brent);

  auto* arith = app.add_subcommand("arith", "boolean circuit to GF(2) arithmetic circuit");
  arith->add_option("circuit", f1)->required();
  arith->add_option("td", f2)->required();
  add_out(arith);
  arith->add_option("--td-out", co.td_out)->required();

  auto* dearith = app.add_subcommand("dearith", "GF(2) formula to boolean formula");
  dearith->add_option("formula", f1)->required();
  add_out(dearith);

  auto* md = app.add_subcommand("md-transform", "leveled circuit to multiplicatively disjoint circuit");
  md->add_option("circuit", f1)->required();
  add_out(md);
  md->add_option("--td-out", co.td_out);

  auto* wsim = app.add_subcommand("width-sim", "leveled circuit of small width");
  wsim->add_option("circuit", f1)->required();
  wsim->add_option("td", f2)->required();
  wsim->add_option("--max-size", max_size);
  wsim->add_flag("--json", co.json, "print the metrics report");
  add_out(wsim);

  bool undirected = false;
  auto* reach = app.add_subcommand("reach", "s-t reachability (exit 0 reachable, 1 not)");
  reach->add_option("graph", f1)->required();
  reach->add_option("td", f2)->required();
  reach->add_option("s", f3)->required();
  reach->add_option("t", f4)->required();
  reach->add_flag("--undirected", undirected);
  reach->add_flag("--telemetry", co.telemetry, "print the frame budget report as JSON");

  GenOptions gen_opt;
  LeveledOptions lev_opt;
  std::string prefix = "gen";
  bool gen_graph = false, gen_leveled = false;
  std::size_t gen_n = 20;
  auto* gen = app.add_subcommand("gen", "seeded random instance");
  gen->add_option("--gates", gen_opt.gates, "gate budget (upper bound on size)");
  gen->add_option("--k", gen_opt.k, "decomposition width");
  gen->add_option("--vars", gen_opt.max_vars);
  gen->add_flag("--md", gen_opt.md);
  gen->add_flag("--sm", gen_opt.sm);
  gen->add_flag("--boolean", gen_opt.boolean);
  gen->add_flag("--graph", gen_graph, "directed graph with decomposition (.gr/.td)");
  gen->add_option("--n", gen_n, "graph vertices");
  gen->add_flag("--leveled", gen_leveled, "leveled circuit (.ckt only)");
  gen->add_option("--width", lev_opt.width);
  gen->add_option("--levels", lev_opt.levels);
  auto* gen_seed = gen->add_option("--seed", seed);
  gen->add_option("--prefix", prefix, "output files <prefix>.ckt/.gr and <prefix>.td");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate) {
      Graph g = graph_input(f1, directed);
      if (f2.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      auto rep = validate_td(g, read_td_file(f2));
      if (rep.ok()) {
        std::cout << "ok\n";
        return 0;
      }
      std::cout << rep.to_string();
      return 1;
    }
    if (*stats) {
      Circuit c = read_circuit_file(f1);
      std::optional<TreeDecomposition> td;
      if (!f2.empty()) td = read_td_file(f2);
      StatsReport s = compute_stats(c, td ? &*td : nullptr);
      json j = stats_json(s);
      if (co.json) {
        std::cout << j.dump() << "\n";
      } else {
        for (auto& [k, v] : j.items()) std::cout << k << ": " << v.dump() << "\n";
      }
      return 0;
    }
    if (*expand_cmd) {
      std::cout << expand(read_circuit_file(f1), field_of(field), max_size).to_string() << "\n";
      return 0;
    }
    if (*equiv) {
      Circuit a = read_circuit_file(f1), b = read_circuit_file(f2);
      bool same;
      if (method == "random")
        same = equiv_random(a, b, field ? field : kRandomPrime, trials, seed_or_draw(equiv_seed, seed));
      else
        same = equiv_exact(a, b, field_of(field), max_size);
      std::cout << (same ? "equivalent" : "different") << "\n";
      return same ? 0 : 1;
    }
    if (*balance) {
      Graph g = graph_input(f1, directed);
      TreeDecomposition td = balance_td(g, read_td_file(f2), {force});
      emit(co.out, write_td(td, g.n));
      return 0;
    }
    if (*pre) {
      PreprocessedPair p = preprocess(read_circuit_file(f1), read_td_file(f2));
      emit(co.out, write_circuit(p.circuit));
      write_text_file(co.td_out, write_td(p.td, p.circuit.size()));
      return 0;
    }
    if (*flatten_cmd) {
      TracebackConfig cfg = mode_config(mode, field);
      cfg.max_formula_size = max_size;
      Circuit c = read_circuit_file(f1);
      FlattenResult r = flatten(c, read_td_file(f2), cfg);
      emit(co.out, write_circuit(to_circuit(r.formula, CircuitKind::Arithmetic, max_size)));
      if (co.telemetry) (co.out.empty() ? std::cerr : std::cout) << traceback_json(r.telemetry).dump() << "\n";
      return 0;
    }
    if (*brent) {
      Circuit c = read_circuit_file(f1);
      if (!c.is_formula()) throw PreconditionError("brent: input is not a formula");
      Algebra alg = c.kind() == CircuitKind::Boolean ? Algebra::boolean() : Algebra(field_of(field));
      Formula f = brent_balance(from_circuit(c), alg);
      emit(co.out, write_circuit(to_circuit(f, c.kind(), max_size)));
      return 0;
    }
    if (*arith) {
      CircuitTd r = arithmetize(read_circuit_file(f1), read_td_file(f2));
      emit(co.out, write_circuit(r.circuit));
      write_text_file(co.td_out, write_td(r.td, r.circuit.size()));
      return 0;
    }
    if (*dearith) {
      emit(co.out, write_circuit(dearithmetize(read_circuit_file(f1))));
      return 0;
    }
    if (*md) {
      MdResult r = md_transform(read_circuit_file(f1));
      emit(co.out, write_circuit(r.circuit));
      if (!co.td_out.empty()) write_text_file(co.td_out, write_td(r.td, r.circuit.size()));
      return 0;
    }
    if (*wsim) {
      WidthSimReport r = width_simulate(read_circuit_file(f1), read_td_file(f2), {max_size});
      emit(co.out, write_circuit(r.output));
      if (co.json) {
        json trace = json::array();
        for (const auto& n : r.node_widths)
          trace.push_back({{"node", n.node}, {"width", n.width}, {"child_width", n.child_width}});
        std::map<std::string, std::size_t> actions;
        for (const auto& rec : r.per_level_trace) ++actions[to_string(rec.action)];
        json j = {{"width", r.width},
                  {"size_total", r.size_total},
                  {"max_width_delta", r.max_width_delta},
                  {"actions", actions},
                  {"nodes", trace}};
        (co.out.empty() ? std::cerr : std::cout) << j.dump() << "\n";
      }
      return 0;
    }
    if (*reach) {
      ReachInstance r;
      r.graph = read_graph_file(f1, !undirected);
      r.td = read_td_file(f2);
      r.s = static_cast<Vertex>(std::stoul(f3));
      r.t = static_cast<Vertex>(std::stoul(f4));
      ReachResult res = solve_reach(r);
      std::cout << (res.reachable ? "reachable" : "unreachable") << "\n";
      if (co.telemetry) {
        json j = frame_json(res.telemetry);
        j["circuit_size"] = res.circuit_size;
        j["circuit_td_width"] = res.circuit_width;
        j["chain_gates_per_bag"] = res.chain_gates_per_bag;
        std::cout << j.dump() << "\n";
      }
      return res.reachable ? 0 : 1;
    }
    if (*gen) {
      std::uint64_t s = seed_or_draw(gen_seed, seed);
      if (gen_graph) {
        GraphTd g = random_graph_td(gen_n, gen_opt.k, true, false, 0.5, s);
        write_text_file(prefix + ".gr", write_graph(g.graph));
        write_text_file(prefix + ".td", write_td(g.td, g.graph.n));
      } else if (gen_leveled) {
        lev_opt.seed = s;
        lev_opt.max_vars = gen_opt.max_vars;
        write_text_file(prefix + ".ckt", write_circuit(random_leveled(lev_opt)));
      } else {
        gen_opt.seed = s;
        CircuitTd ct = random_circuit_td(gen_opt);
        write_text_file(prefix + ".ckt", write_circuit(ct.circuit));
        write_text_file(prefix + ".td", write_td(ct.td, ct.circuit.size()));
      }
      return 0;
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
