#include "twflat/td_io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "twflat/circuit_io.hpp"
#include "twflat/error.hpp"

namespace twf {

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t number(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

template <class F>
void for_lines(std::string_view text, F&& f) {
  std::size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto tok = tokens(text.substr(pos, end - pos));
    if (!tok.empty() && tok[0] != "c") f(tok, lineno);
    pos = end + 1;
  }
}

}  // namespace

Graph parse_graph(std::string_view text, bool directed) {
  Graph g;
  g.directed = directed;
  bool header = false;
  std::size_t m = 0;
  for_lines(text, [&](const std::vector<std::string_view>& tok, std::size_t line) {
    if (tok[0] == "p") {
      if (header) throw ParseError(line, "duplicate header");
      if (tok.size() != 4 || tok[1] != "tw") throw ParseError(line, "expected 'p tw <n> <m>'");
      g.n = number(tok[2], line);
      m = number(tok[3], line);
      header = true;
      return;
    }
    if (!header) throw ParseError(line, "edge before header");
    if (tok.size() != 2) throw ParseError(line, "expected 'u v'");
    auto u = number(tok[0], line), v = number(tok[1], line);
    if (u < 1 || v < 1 || u > g.n || v > g.n) throw ParseError(line, "vertex out of range");
    g.edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
  });
  if (!header) throw ParseError(1, "missing 'p tw' header");
  if (g.edges.size() != m) throw ParseError(1, "header announces " + std::to_string(m) + " edges, found " +
                                                   std::to_string(g.edges.size()));
  return g;
}

std::string write_graph(const Graph& g) {
  std::ostringstream os;
  os << "p tw " << g.n << ' ' << g.edges.size() << '\n';
  for (auto [u, v] : g.edges) os << u << ' ' << v << '\n';
  return os.str();
}

TreeDecomposition parse_td(std::string_view text) {
  bool header = false;
  std::size_t nbags = 0, maxbag = 0, n = 0;
  std::vector<std::vector<Vertex>> bags;
  std::vector<bool> seen;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for_lines(text, [&](const std::vector<std::string_view>& tok, std::size_t line) {
    if (tok[0] == "s") {
      if (header) throw ParseError(line, "duplicate header");
      if (tok.size() != 5 || tok[1] != "td") throw ParseError(line, "expected 's td <bags> <max-bag> <n>'");
      nbags = number(tok[2], line);
      maxbag = number(tok[3], line);
      n = number(tok[4], line);
      bags.assign(nbags, {});
      seen.assign(nbags, false);
      header = true;
      return;
    }
    if (!header) throw ParseError(line, "content before header");
    if (tok[0] == "b") {
      if (tok.size() < 2) throw ParseError(line, "bag line without id");
      auto id = number(tok[1], line);
      if (id < 1 || id > nbags) throw ParseError(line, "bag id out of range");
      if (seen[id - 1]) throw ParseError(line, "duplicate bag " + std::to_string(id));
      seen[id - 1] = true;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto v = number(tok[i], line);
        if (v < 1 || v > n) throw ParseError(line, "vertex out of range");
        bags[id - 1].push_back(static_cast<Vertex>(v));
      }
      if (bags[id - 1].size() > maxbag) throw ParseError(line, "bag exceeds announced maximum size");
      return;
    }
    if (tok.size() != 2) throw ParseError(line, "expected tree edge '<id> <id>'");
    auto a = number(tok[0], line), b = number(tok[1], line);
    if (a < 1 || b < 1 || a > nbags || b > nbags) throw ParseError(line, "tree edge references unknown bag");
    edges.push_back({static_cast<NodeId>(a - 1), static_cast<NodeId>(b - 1)});
  });
  if (!header) throw ParseError(1, "missing 's td' header");
  for (std::size_t i = 0; i < nbags; ++i)
    if (!seen[i]) throw ParseError(1, "bag " + std::to_string(i + 1) + " is never defined");
  return TreeDecomposition(std::move(bags), edges, 0);
}

std::string write_td(const TreeDecomposition& td, std::size_t n) {
  auto order = td.preorder();
  std::vector<NodeId> id(td.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) id[order[i]] = static_cast<NodeId>(i + 1);
  std::size_t maxbag = 0;
  for (const auto& b : td.bags()) maxbag = std::max(maxbag, b.size());
  std::ostringstream os;
  os << "s td " << td.node_count() << ' ' << maxbag << ' ' << n << '\n';
  for (NodeId t : order) {
    os << "b " << id[t];
    for (Vertex v : td.bag(t)) os << ' ' << v;
    os << '\n';
  }
  for (NodeId t : order)
    if (td.parent(t) != kNoNode) os << id[td.parent(t)] << ' ' << id[t] << '\n';
  return os.str();
}

Graph read_graph_file(const std::string& path, bool directed) { return parse_graph(read_text_file(path), directed); }

TreeDecomposition read_td_file(const std::string& path) { return parse_td(read_text_file(path)); }

}  // namespace twf
