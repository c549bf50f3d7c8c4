#include <algorithm>
#include <map>
#include <set>

#include "mutable_circuit.hpp"
#include "twflat/analysis.hpp"
#include "twflat/error.hpp"
#include "twflat/transforms.hpp"

namespace twf {

using detail::MGate;
using detail::MutableCircuit;

Circuit reduce_fanout(const Circuit& c) {
  if (!c.is_leveled()) throw PreconditionError("reduce_fanout: circuit is not leveled");
  auto fan = c.fanout();
  std::size_t rmax = fan.empty() ? 0 : *std::max_element(fan.begin(), fan.end());
  if (rmax <= 2) return c;
  std::size_t half = (rmax + 1) / 2;
  int depth = 0;
  while ((std::size_t{1} << depth) < half) ++depth;
  const int stretch = depth + 1;

  MutableCircuit mc(c.kind());
  std::vector<int> levels{0};  // index 0 unused
  auto add = [&](MGate g, int level) {
    GateId id = mc.add(std::move(g));
    levels.push_back(level);
    return id;
  };
  // leaves[x][u]: gate serving the u-th use of x.
  std::vector<std::vector<GateId>> leaves(c.size() + 1);
  std::vector<std::size_t> next_use(c.size() + 1, 0);
  std::vector<GateId> image(c.size() + 1, kNoGate);
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    MGate m;
    m.op = g.op;
    m.name = g.name;
    m.variable = g.variable;
    m.ref = g.ref;
    m.value = g.value;
    for (GateId in : g.inputs()) m.in.push_back(leaves[in][next_use[in]++]);
    const int base = c.level(id) * stretch;
    image[id] = add(m, base);
    const std::size_t r = fan[id - 1];
    if (r == 0) continue;
    const std::size_t width = (r + 1) / 2;
    std::vector<GateId> prev{image[id]};
    for (int j = 1; j <= depth; ++j) {
      std::size_t nj = std::min<std::size_t>(std::size_t{1} << j, width);
      std::vector<GateId> cur;
      for (std::size_t i = 0; i < nj; ++i) {
        MGate zero;
        zero.op = Op::Const;
        zero.value = 0;
        GateId z = add(zero, base + j - 1);
        MGate pass;
        pass.op = c.kind() == CircuitKind::Boolean ? Op::Or : Op::Add;
        pass.in = {prev[i * prev.size() / nj], z};
        cur.push_back(add(pass, base + j));
      }
      prev = std::move(cur);
    }
    for (std::size_t u = 0; u < r; ++u) leaves[id].push_back(prev[u / 2]);
  }
  mc.output = image[c.output()];
  return mc.finalize(levels).circuit;
}

std::uint64_t md_size_bound(std::uint64_t s, std::uint64_t d) {
  // s + s^2 + ... + s^(d+1)
  const std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0, power = 1;
  for (std::uint64_t i = 1; i <= d + 1; ++i) {
    if (power > kMax / std::max<std::uint64_t>(s, 1)) return kMax;
    power *= s;
    if (total > kMax - power) return kMax;
    total += power;
  }
  return total;
}

namespace {

// Gate of a piece; inputs refer to piece-local ids or, after rewiring, to
// gates already emitted into the global pool.
struct PGate {
  Op op;
  std::string name, variable;
  GateId ref = kNoGate;
  Int value;
  int level = 0;
  std::vector<std::pair<bool, GateId>> in;  // (global?, id)
};

struct Piece {
  std::vector<PGate> gates;  // local ids are 1-based indices
  std::vector<GateId> outputs;
  // Pairs of outputs that meet on opposite sides of a multiplication in the
  // enclosing circuit, so their cones must stay disjoint.
  std::vector<std::pair<GateId, GateId>> apart;
};

struct Emitted {
  std::vector<GateId> global;        // local id -> global id
  std::map<int, NodeId> level_bag;   // level -> bag holding all of it
};

class MdBuilder {
 public:
  MutableCircuit pool{CircuitKind::Arithmetic};
  std::vector<int> levels{0};
  std::vector<std::vector<Vertex>> bags;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::size_t> copies_per_depth;

  Emitted run(Piece p, std::size_t depth) {
    const std::size_t n = p.gates.size();
    auto local = [&](GateId id) -> PGate& { return p.gates[id - 1]; };
    int lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      lo = i ? std::min(lo, p.gates[i].level) : p.gates[i].level;
      hi = i ? std::max(hi, p.gates[i].level) : p.gates[i].level;
    }
    struct Connector {
      std::vector<GateId> copies;   // global
      std::vector<GateId> readers;  // local
      int level;
      NodeId sub_bag;
    };
    std::vector<Connector> connectors;

    for (int r = hi - 1; r >= lo; --r) {
      // Local consumer lists (slot-precise) and reflexive ancestor sets.
      std::vector<std::vector<std::pair<GateId, std::size_t>>> uses(n + 1);
      std::vector<Bitset> anc(n + 1, Bitset(n + 1));
      for (GateId id = 1; id <= n; ++id) {
        anc[id].set(id);
        const PGate& g = local(id);
        for (std::size_t s = 0; s < g.in.size(); ++s)
          if (!g.in[s].first) {
            uses[g.in[s].second].push_back({id, s});
            anc[id] |= anc[g.in[s].second];
          }
      }
      auto reaches_input = [&](std::pair<GateId, std::size_t> use, GateId m, std::size_t j) {
        if (use.first == m) return use.second == j;
        const auto& x = local(m).in[j];
        return !x.first && anc[x.second].test(use.first);
      };
      // u1 and u2 end up on opposite sides of some multiplication.
      auto split = [&](std::pair<GateId, std::size_t> u1, std::pair<GateId, std::size_t> u2) {
        for (GateId m = 1; m <= n; ++m) {
          if (local(m).op != Op::Mul || local(m).in.size() != 2) continue;
          if ((reaches_input(u1, m, 0) && reaches_input(u2, m, 1)) ||
              (reaches_input(u1, m, 1) && reaches_input(u2, m, 0)))
            return true;
        }
        for (auto [o1, o2] : p.apart)
          if ((anc[o1].test(u1.first) && anc[o2].test(u2.first)) ||
              (anc[o2].test(u1.first) && anc[o1].test(u2.first)))
            return true;
        return false;
      };
      std::vector<GateId> conflicted;
      for (GateId g = 1; g <= n; ++g) {
        if (local(g).level != r || uses[g].size() != 2) continue;
        if (split(uses[g][0], uses[g][1])) conflicted.push_back(g);
      }
      if (conflicted.empty()) continue;

      // Cone of the conflicted gates as a fresh piece.
      std::vector<bool> in_cone(n + 1, false);
      std::vector<GateId> stack = conflicted;
      for (GateId g : conflicted) in_cone[g] = true;
      while (!stack.empty()) {
        GateId g = stack.back();
        stack.pop_back();
        for (auto [glob, in] : local(g).in)
          if (!glob && !in_cone[in]) {
            in_cone[in] = true;
            stack.push_back(in);
          }
      }
      Piece sub;
      std::vector<GateId> sub_id(n + 1, kNoGate);
      for (GateId g = 1; g <= n; ++g) {
        if (!in_cone[g]) continue;
        PGate copy = local(g);
        copy.name.clear();
        for (auto& in : copy.in) in.second = sub_id[in.second];
        sub.gates.push_back(std::move(copy));
        sub_id[g] = static_cast<GateId>(sub.gates.size());
      }
      for (GateId g : conflicted) sub.outputs.push_back(sub_id[g]);
      for (std::size_t i = 0; i < conflicted.size(); ++i)
        for (std::size_t j = i + 1; j < conflicted.size(); ++j)
          if (split(uses[conflicted[i]][1], uses[conflicted[j]][1]))
            sub.apart.push_back({sub_id[conflicted[i]], sub_id[conflicted[j]]});
      if (copies_per_depth.size() <= depth) copies_per_depth.resize(depth + 1, 0);
      copies_per_depth[depth] += sub.gates.size();
      Emitted e = run(std::move(sub), depth + 1);

      Connector conn{{}, {}, r, e.level_bag.at(r)};
      for (GateId g : conflicted) {
        auto [reader, slot] = uses[g][1];
        GateId copy = e.global[sub_id[g] - 1];
        local(reader).in[slot] = {true, copy};
        conn.copies.push_back(copy);
        conn.readers.push_back(reader);
      }
      connectors.push_back(std::move(conn));
    }

    // Emit the piece's own gates.
    Emitted out;
    out.global.assign(n, kNoGate);
    for (GateId id = 1; id <= n; ++id) {
      const PGate& g = local(id);
      MGate m;
      m.op = g.op;
      m.name = g.name;
      m.variable = g.variable;
      m.ref = g.ref;
      m.value = g.value;
      for (auto [glob, in] : g.in) m.in.push_back(glob ? in : out.global[in - 1]);
      out.global[id - 1] = pool.add(std::move(m));
      levels.push_back(g.level);
    }
    // Path decomposition over the piece's levels.
    std::map<int, std::vector<Vertex>> by_level;
    for (GateId id = 1; id <= n; ++id) by_level[local(id).level].push_back(out.global[id - 1]);
    auto level_set = [&](int l) {
      auto it = by_level.find(l);
      return it == by_level.end() ? std::vector<Vertex>{} : it->second;
    };
    std::map<int, NodeId> pair_bag;  // level j -> bag L_{j-1} u L_j
    if (hi == lo) {
      bags.push_back(level_set(lo));
      out.level_bag[lo] = static_cast<NodeId>(bags.size() - 1);
    } else {
      for (int j = lo + 1; j <= hi; ++j) {
        auto b = level_set(j - 1);
        auto top = level_set(j);
        b.insert(b.end(), top.begin(), top.end());
        bags.push_back(std::move(b));
        NodeId t = static_cast<NodeId>(bags.size() - 1);
        if (j > lo + 1) edges.push_back({pair_bag[j - 1], t});
        pair_bag[j] = t;
      }
      out.level_bag[lo] = pair_bag[lo + 1];
      for (int j = lo + 1; j <= hi; ++j) out.level_bag[j] = pair_bag[j];
    }
    for (const Connector& conn : connectors) {
      std::vector<Vertex> b = conn.copies;
      for (GateId reader : conn.readers) b.push_back(out.global[reader - 1]);
      bags.push_back(std::move(b));
      NodeId t = static_cast<NodeId>(bags.size() - 1);
      edges.push_back({pair_bag.at(conn.level + 1), t});
      edges.push_back({t, conn.sub_bag});
    }
    return out;
  }
};

}  // namespace

MdResult md_transform(const Circuit& c) {
  if (c.kind() != CircuitKind::Arithmetic) throw PreconditionError("md_transform: circuit is not arithmetic");
  if (!c.is_leveled()) throw PreconditionError("md_transform: circuit is not leveled");
  for (std::size_t f : c.fanout())
    if (f > 2) throw PreconditionError("md_transform: fan-out above 2 (run reduce_fanout first)");
  if (is_multiplicatively_disjoint(c)) return {c, td_from_leveled(c), {}};

  Piece p;
  for (GateId id = 1; id <= c.size(); ++id) {
    const Gate& g = c.gate(id);
    PGate pg{g.op, g.name, g.variable, g.ref, g.value, c.level(id), {}};
    for (GateId in : g.inputs()) pg.in.push_back({false, in});
    p.gates.push_back(std::move(pg));
  }
  p.outputs = {c.output()};
  MdBuilder b;
  Emitted e = b.run(std::move(p), 0);
  b.pool.output = e.global[c.output() - 1];
  // The top-level path is rooted at its last bag.
  NodeId root = e.level_bag.rbegin()->second;
  auto fin = b.pool.finalize(b.bags, b.edges, root, b.levels);
  return {std::move(fin.circuit), std::move(fin.td), std::move(b.copies_per_depth)};
}

}  // namespace twf
