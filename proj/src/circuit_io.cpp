#include "twflat/circuit_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "twflat/error.hpp"

namespace twf {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> tok;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::istringstream ss{std::string(raw)};
    Line l{number, {}};
    for (std::string t; ss >> t;) l.tok.push_back(t);
    if (!l.tok.empty()) lines.push_back(std::move(l));
    pos = end + 1;
  }
  return lines;
}

std::optional<Op> parse_op(const std::string& s) {
  if (s == "add") return Op::Add;
  if (s == "mul") return Op::Mul;
  if (s == "and") return Op::And;
  if (s == "or") return Op::Or;
  if (s == "not") return Op::Not;
  return std::nullopt;
}

}  // namespace

Circuit parse_circuit(std::string_view text) {
  auto lines = tokenize(text);

  // First pass: names and their definition lines, so that forward and
  // cyclic references can be told apart from undefined ones.
  std::map<std::string, std::size_t> def_index;
  std::vector<const Line*> defs;
  const Line* output_line = nullptr;
  bool has_arith = false, has_bool = false;
  for (const Line& l : lines) {
    const std::string& kw = l.tok[0];
    if (kw == "output") {
      if (l.tok.size() != 2) throw ParseError(l.number, "expected: output <name>");
      if (output_line) throw ParseError(l.number, "more than one output");
      output_line = &l;
      continue;
    }
    if (kw == "input") {
      if (l.tok.size() != 2 && l.tok.size() != 3) throw ParseError(l.number, "expected: input <name> [<variable>]");
    } else if (kw == "const") {
      if (l.tok.size() != 3) throw ParseError(l.number, "expected: const <name> <integer>");
    } else if (kw == "zvar") {
      if (l.tok.size() != 3) throw ParseError(l.number, "expected: zvar <name> <variable>");
      has_arith = true;
    } else if (kw == "gate") {
      if (l.tok.size() < 4) throw ParseError(l.number, "expected: gate <name> <op> <arg> [<arg>]");
      auto op = parse_op(l.tok[2]);
      if (!op) throw ParseError(l.number, "unknown gate label '" + l.tok[2] + "'");
      std::size_t arity = l.tok.size() - 3;
      bool ok = (*op == Op::Not) ? arity == 1 : (*op == Op::Add || *op == Op::Or) ? (arity == 1 || arity == 2) : arity == 2;
      if (!ok) throw ParseError(l.number, "fan-in violation: " + l.tok[2] + " with " + std::to_string(arity) + " inputs");
      if (*op == Op::Add || *op == Op::Mul) has_arith = true;
      else has_bool = true;
    } else {
      throw ParseError(l.number, "unknown directive '" + kw + "'");
    }
    if (def_index.count(l.tok[1])) throw ParseError(l.number, "duplicate name '" + l.tok[1] + "'");
    def_index[l.tok[1]] = defs.size();
    defs.push_back(&l);
  }
  if (has_arith && has_bool) throw ParseError(lines.empty() ? 0 : lines.back().number, "mixes arithmetic and boolean gate labels");
  if (!output_line) throw ParseError(lines.empty() ? 0 : lines.back().number, "missing output");

  // Reference checks.
  auto arg_index = [&](const Line& l, const std::string& a) -> std::size_t {
    auto it = def_index.find(a);
    if (it == def_index.end()) throw ParseError(l.number, "undefined reference '" + a + "'");
    return it->second;
  };
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const Line& l = *defs[i];
    if (l.tok[0] != "gate") continue;
    for (std::size_t k = 3; k < l.tok.size(); ++k) {
      std::size_t j = arg_index(l, l.tok[k]);
      if (j < i) continue;
      // Forward reference: decide whether it closes a cycle.
      std::vector<int> state(defs.size(), 0);
      std::function<bool(std::size_t)> reaches_i = [&](std::size_t u) -> bool {
        if (u == i) return true;
        if (state[u]) return false;
        state[u] = 1;
        const Line& lu = *defs[u];
        if (lu.tok[0] != "gate") return false;
        for (std::size_t m = 3; m < lu.tok.size(); ++m) {
          auto it = def_index.find(lu.tok[m]);
          if (it != def_index.end() && reaches_i(it->second)) return true;
        }
        return false;
      };
      if (reaches_i(j)) throw ParseError(l.number, "cycle through '" + l.tok[1] + "'");
      throw ParseError(l.number, "forward reference to '" + l.tok[k] + "' (gates must be defined before use)");
    }
  }

  CircuitBuilder b(has_bool ? CircuitKind::Boolean : CircuitKind::Arithmetic);
  for (const Line* lp : defs) {
    const Line& l = *lp;
    const std::string& kw = l.tok[0];
    try {
      if (kw == "input") {
        b.input(l.tok.size() == 3 ? l.tok[2] : l.tok[1], l.tok[1]);
      } else if (kw == "zvar") {
        b.zvar(l.tok[2], kNoGate, l.tok[1]);
      } else if (kw == "const") {
        Int v;
        try {
          v = Int(l.tok[2]);
        } catch (const std::exception&) {
          throw ParseError(l.number, "bad integer '" + l.tok[2] + "'");
        }
        if (has_bool && v != 0 && v != 1) throw ParseError(l.number, "boolean constant must be 0 or 1");
        b.constant(v, l.tok[1]);
      } else {
        Op op = *parse_op(l.tok[2]);
        GateId a = static_cast<GateId>(def_index[l.tok[3]] + 1);
        if (l.tok.size() == 4) b.unary(op, a, l.tok[1]);
        else b.binary(op, a, static_cast<GateId>(def_index[l.tok[4]] + 1), l.tok[1]);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(l.number, e.what());
    }
  }
  auto out = def_index.find(output_line->tok[1]);
  if (out == def_index.end()) throw ParseError(output_line->number, "undefined output '" + output_line->tok[1] + "'");
  try {
    return b.build(static_cast<GateId>(out->second + 1));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(output_line->number, e.what());
  }
}

std::string write_circuit(const Circuit& c) {
  std::ostringstream os;
  for (const Gate& g : c.gates()) {
    switch (g.op) {
      case Op::Input:
        os << "input " << g.name;
        if (g.variable != g.name) os << ' ' << g.variable;
        break;
      case Op::ZVar: os << "zvar " << g.name << ' ' << g.variable; break;
      case Op::Const: os << "const " << g.name << ' ' << g.value; break;
      default:
        os << "gate " << g.name << ' ' << op_name(g.op);
        for (GateId in : g.inputs()) os << ' ' << c.gate(in).name;
    }
    os << '\n';
  }
  os << "output " << c.gate(c.output()).name << '\n';
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

Circuit read_circuit_file(const std::string& path) { return parse_circuit(read_text_file(path)); }

void write_circuit_file(const Circuit& c, const std::string& path) { write_text_file(path, write_circuit(c)); }

}  // namespace twf
