#include "mutable_circuit.hpp"

#include <algorithm>
#include <unordered_set>

#include "twflat/error.hpp"

namespace twf::detail {

MutableCircuit::MutableCircuit(const Circuit& c) : kind_(c.kind()) {
  for (const Gate& g : c.gates()) {
    MGate m;
    m.op = g.op;
    m.name = g.name;
    m.variable = g.variable;
    m.ref = g.ref;
    m.value = g.value;
    m.in.assign(g.inputs().begin(), g.inputs().end());
    gates_.push_back(std::move(m));
  }
  output = c.output();
}

std::vector<bool> MutableCircuit::live_mask() const {
  std::vector<bool> live(gates_.size() + 1, false);
  std::vector<GateId> stack{output};
  live[output] = true;
  while (!stack.empty()) {
    GateId g = stack.back();
    stack.pop_back();
    for (GateId in : at(g).in)
      if (!live[in]) {
        live[in] = true;
        stack.push_back(in);
      }
  }
  return live;
}

Finalized MutableCircuit::finalize(const std::vector<std::vector<Vertex>>& bags,
                                   const std::vector<std::pair<NodeId, NodeId>>& edges, NodeId root,
                                   const std::optional<std::vector<int>>& levels) const {
  Finalized out = finalize(levels);
  std::vector<std::vector<Vertex>> nb;
  for (const auto& b : bags) {
    std::vector<Vertex> m;
    for (Vertex v : b)
      if (v < out.new_id.size() && out.new_id[v] != kNoGate) m.push_back(out.new_id[v]);
    nb.push_back(std::move(m));
  }
  out.td = TreeDecomposition(std::move(nb), edges, root);
  return out;
}

Finalized MutableCircuit::finalize(const std::optional<std::vector<int>>& levels) const {
  const std::size_t n = gates_.size();
  Finalized out;
  out.new_id.assign(n + 1, kNoGate);
  std::vector<std::uint8_t> state(n + 1, 0);  // 0 new, 1 open, 2 done
  std::vector<GateId> order;
  for (GateId s = 1; s <= n; ++s) {
    if (!at(s).alive || state[s]) continue;
    std::vector<std::pair<GateId, std::size_t>> stack{{s, 0}};
    state[s] = 1;
    while (!stack.empty()) {
      auto& [g, i] = stack.back();
      const auto& in = at(g).in;
      if (i < in.size()) {
        GateId c = in[i++];
        if (!at(c).alive) throw Error("rewrite left a live gate reading a dropped gate");
        if (state[c] == 1) throw Error("rewrite introduced a cycle");
        if (state[c] == 0) {
          state[c] = 1;
          stack.push_back({c, 0});
        }
        continue;
      }
      state[g] = 2;
      order.push_back(g);
      stack.pop_back();
    }
  }
  CircuitBuilder b(kind_);
  std::unordered_set<std::string> reserved;
  for (GateId g : order)
    if (!at(g).name.empty()) reserved.insert(at(g).name);
  std::size_t counter = 0;
  auto auto_name = [&](const MGate& m) {
    if (!m.name.empty()) return m.name;
    if (m.op == Op::Input && !reserved.count(m.variable) && !b.has_name(m.variable)) return m.variable;
    std::string name;
    do name = "n" + std::to_string(++counter);
    while (reserved.count(name) || b.has_name(name));
    return name;
  };
  std::vector<int> lv;
  for (GateId g : order) {
    const MGate& m = at(g);
    const std::string name = auto_name(m);
    std::vector<GateId> ins;
    for (GateId i : m.in) ins.push_back(out.new_id[i]);
    GateId id;
    switch (m.op) {
      case Op::Input:
        id = b.input(m.variable, name);
        break;
      case Op::ZVar:
        id = b.zvar(m.variable, m.ref, name);
        break;
      case Op::Const:
        id = b.constant(m.value, name);
        break;
      default:
        id = ins.size() == 1 ? b.unary(m.op, ins[0], name) : b.binary(m.op, ins[0], ins[1], name);
    }
    out.new_id[g] = id;
    out.pool_id.push_back(g);
    if (levels) lv.push_back(levels->at(g));
  }
  if (output == kNoGate || out.new_id[output] == kNoGate) throw Error("rewrite lost the output gate");
  if (levels) {
    // Shift to start at 0.
    int lo = lv.empty() ? 0 : *std::min_element(lv.begin(), lv.end());
    for (int& x : lv) x -= lo;
    out.circuit = b.build(out.new_id[output], lv);
  } else {
    out.circuit = b.build(out.new_id[output]);
  }
  return out;
}

}  // namespace twf::detail
