#include "twflat/width_sim.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "twflat/error.hpp"
#include "twflat/traceback.hpp"

namespace twf {

std::string to_string(SimAction a) {
  switch (a) {
    case SimAction::Leaf:
      return "leaf";
    case SimAction::Combine:
      return "combine";
    case SimAction::ZLeaf:
      return "zleaf";
    case SimAction::Descend:
      return "descend";
  }
  return "?";
}

namespace {

struct BGate {
  Op op = Op::Const;
  std::string variable;
  GateId ref = kNoGate;
  Int value;
  std::array<std::uint32_t, 2> in{0, 0};
  std::uint8_t arity = 0;
};

// Leveled multi-output circuit; inputs of a gate at level l index level l-1.
struct Block {
  std::vector<std::vector<BGate>> levels;
  std::vector<std::uint32_t> outputs;  // positions in the top level

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& l : levels) w = std::max(w, l.size());
    return w;
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.size();
    return n;
  }
};

// The part of b feeding top-level position out, as a one-output block.
Block cone(const Block& b, std::uint32_t out) {
  const std::size_t h = b.levels.size();
  std::vector<std::vector<std::int64_t>> pos(h);
  for (std::size_t l = 0; l < h; ++l) pos[l].assign(b.levels[l].size(), -1);
  pos[h - 1][out] = 0;
  for (std::size_t l = h; l-- > 1;)
    for (std::size_t i = 0; i < b.levels[l].size(); ++i)
      if (pos[l][i] >= 0)
        for (std::uint8_t j = 0; j < b.levels[l][i].arity; ++j) pos[l - 1][b.levels[l][i].in[j]] = 0;
  std::size_t low = 0;
  while (std::none_of(pos[low].begin(), pos[low].end(), [](std::int64_t p) { return p >= 0; })) ++low;
  Block c;
  for (std::size_t l = low; l < h; ++l) {
    std::vector<BGate> level;
    for (std::size_t i = 0; i < b.levels[l].size(); ++i) {
      if (pos[l][i] < 0) continue;
      pos[l][i] = static_cast<std::int64_t>(level.size());
      BGate g = b.levels[l][i];
      for (std::uint8_t j = 0; j < g.arity; ++j) g.in[j] = static_cast<std::uint32_t>(pos[l - 1][g.in[j]]);
      level.push_back(std::move(g));
    }
    c.levels.push_back(std::move(level));
  }
  c.outputs = {0};
  return c;
}

class Simulator {
 public:
  Simulator(const PreprocessedPair& p, WidthSimOptions opt)
      : ctx_(p.circuit, p.td), c_(p.circuit), pass_(p.circuit.kind() == CircuitKind::Boolean ? Op::Or : Op::Add),
        opt_(opt) {}

  WidthSimReport run() {
    const TreeDecomposition& td = ctx_.td();
    std::vector<NodeId> order = td.preorder();
    std::reverse(order.begin(), order.end());
    blocks_.resize(td.node_count());
    widths_.assign(td.node_count(), 0);
    for (NodeId t : order) {
      build(t);
      for (NodeId ch : td.children(t)) blocks_[ch] = Block();
    }
    NodeId r = td.root();
    const auto& bag = td.bag(r);
    std::size_t at = std::find(bag.begin(), bag.end(), c_.output()) - bag.begin();
    Block out = cone(blocks_[r], blocks_[r].outputs[at]);
    report_.output = to_circuit(out);
    report_.width = out.width();
    report_.size_total = report_.output.size();
    return std::move(report_);
  }

 private:
  void build(NodeId t) {
    const auto& bag = ctx_.td().bag(t);  // sorted ascending: a topological order
    Block& b = blocks_[t];
    std::size_t child_width = 0;
    for (NodeId ch : ctx_.td().children(t)) child_width = std::max(child_width, widths_[ch]);
    for (std::size_t i = 0; i < bag.size(); ++i) {
      const GateId h = bag[i];
      const Gate& g = c_.gate(h);
      Classified cls = ctx_.classify(t, h);
      SimAction action = SimAction::Leaf;
      switch (cls.step) {
        case Step::Leaf: {
          BGate x;
          x.op = g.op;
          x.variable = g.variable;
          x.ref = g.ref;
          x.value = g.value;
          push_top(b, std::move(x));
          break;
        }
        case Step::ZLeaf: {
          action = SimAction::ZLeaf;
          BGate z;
          z.op = Op::ZVar;
          z.variable = ctx_.zname(h);
          z.ref = h;
          push_top(b, std::move(z));
          break;
        }
        case Step::Combine: {
          action = SimAction::Combine;
          std::vector<BGate> level = threads(b);
          BGate x;
          x.op = g.op;
          x.arity = static_cast<std::uint8_t>(g.arity());
          for (std::size_t j = 0; j < g.arity(); ++j) x.in[j] = b.outputs[index_in(bag, g.input(j))];
          b.outputs.push_back(static_cast<std::uint32_t>(level.size()));
          level.push_back(std::move(x));
          b.levels.push_back(std::move(level));
          for (std::uint32_t k = 0; k + 1 < b.outputs.size(); ++k) b.outputs[k] = k;
          break;
        }
        case Step::Descend: {
          action = SimAction::Descend;
          const auto& cbag = ctx_.td().bag(cls.child);
          const Block& src = blocks_[cls.child];
          stack(b, cone(src, src.outputs[index_in(cbag, h)]), bag, i);
          break;
        }
      }
      total_ += 1;
      if (b.size() > opt_.max_gates)
        throw BudgetExceeded("width_sim: partial circuit exceeds " + std::to_string(opt_.max_gates) + " gates");
      report_.per_level_trace.push_back({t, i, h, action, cls.child, b.width()});
    }
    widths_[t] = b.width();
    report_.node_widths.push_back({t, widths_[t], child_width});
    if (widths_[t] > child_width) report_.max_width_delta = std::max(report_.max_width_delta, widths_[t] - child_width);
  }

  static std::size_t index_in(const std::vector<Vertex>& bag, GateId g) {
    auto it = std::lower_bound(bag.begin(), bag.end(), g);
    if (it == bag.end() || *it != g) throw Error("width_sim: gate missing from bag");
    return static_cast<std::size_t>(it - bag.begin());
  }

  // Pass-through copies of the current outputs, as the start of a new level.
  std::vector<BGate> threads(const Block& b) const {
    std::vector<BGate> level;
    for (std::uint32_t o : b.outputs) {
      BGate p;
      p.op = pass_;
      p.arity = 1;
      p.in[0] = o;
      level.push_back(std::move(p));
    }
    return level;
  }

  static void push_top(Block& b, BGate g) {
    if (b.levels.empty()) b.levels.emplace_back();
    b.outputs.push_back(static_cast<std::uint32_t>(b.levels.back().size()));
    b.levels.back().push_back(std::move(g));
  }

  // Places `piece` above b, threading b's outputs alongside and feeding
  // them into the piece's z-leaves.
  void stack(Block& b, const Block& piece, const std::vector<Vertex>& bag, std::size_t i) {
    const std::size_t n_threads = b.outputs.size();
    std::vector<std::uint32_t> prev;  // piece position -> new position, previous level
    for (std::size_t l = 0; l < piece.levels.size(); ++l) {
      std::vector<BGate> level = b.levels.empty() ? std::vector<BGate>() : threads(b);
      std::vector<std::uint32_t> cur(piece.levels[l].size());
      for (std::size_t j = 0; j < piece.levels[l].size(); ++j) {
        const BGate& g = piece.levels[l][j];
        if (g.op == Op::ZVar) {
          std::size_t at = index_in(bag, g.ref);
          if (at >= i || at >= n_threads)
            throw Error("width_sim: z-variable of a later bag gate in a copied component");
          cur[j] = static_cast<std::uint32_t>(at);
          continue;
        }
        BGate x = g;
        for (std::uint8_t k = 0; k < x.arity; ++k) x.in[k] = prev[x.in[k]];
        cur[j] = static_cast<std::uint32_t>(level.size());
        level.push_back(std::move(x));
      }
      if (!b.levels.empty() || !level.empty()) {
        b.levels.push_back(std::move(level));
        for (std::uint32_t k = 0; k < n_threads; ++k) b.outputs[k] = k;
      }
      prev = std::move(cur);
    }
    b.outputs.push_back(prev[piece.outputs[0]]);
  }

  Circuit to_circuit(const Block& b) const {
    CircuitBuilder cb(c_.kind());
    std::vector<int> levels;
    std::vector<GateId> prev;
    for (std::size_t l = 0; l < b.levels.size(); ++l) {
      std::vector<GateId> cur;
      for (const BGate& g : b.levels[l]) {
        GateId id;
        switch (g.op) {
          case Op::Input:
            id = cb.input(g.variable);
            break;
          case Op::Const:
            id = cb.constant(g.value);
            break;
          case Op::ZVar:
            throw Error("width_sim: z-variable survives at the root");
          default:
            id = g.arity == 1 ? cb.unary(g.op, prev[g.in[0]]) : cb.binary(g.op, prev[g.in[0]], prev[g.in[1]]);
        }
        cur.push_back(id);
        levels.push_back(static_cast<int>(l));
      }
      prev = std::move(cur);
    }
    return cb.build(prev[b.outputs[0]], levels);
  }

  TracebackContext ctx_;
  const Circuit& c_;
  Op pass_;
  WidthSimOptions opt_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> widths_;
  std::size_t total_ = 0;
  WidthSimReport report_;
};

}  // namespace

WidthSimReport width_simulate(const PreprocessedPair& p, WidthSimOptions options) {
  if (p.td.node_count() == 0) throw PreconditionError("width_sim: empty decomposition");
  if (!check_preprocessed(p)) throw PreconditionError("width_sim: pair is not preprocessed");
  if (!p.td.contains(p.td.root(), p.circuit.output()))
    throw PreconditionError("width_sim: output gate not in the root bag");
  return Simulator(p, options).run();
}

WidthSimReport width_simulate(const Circuit& c, const TreeDecomposition& td, WidthSimOptions options) {
  auto rep = validate_td(graph_of(c), td);
  if (!rep.ok()) throw PreconditionError("width_sim: invalid decomposition: " + rep.violations[0].message);
  TreeDecomposition bal = root_with_output(balance_td(graph_of(c), td), c);
  return width_simulate(preprocess(c, bal), options);
}

}  // namespace twf
