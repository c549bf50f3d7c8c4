#include "twflat/stats.hpp"

#include "twflat/analysis.hpp"

namespace twf {

StatsReport compute_stats(const Circuit& c, const TreeDecomposition* td) {
  StatsReport r;
  r.size_ops = c.size_ops();
  r.size_total = c.size();
  r.depth = circuit_depth(c);
  r.formal_degree = formal_degree(c);
  r.mult_chain_length = mult_chain_length(c);
  r.is_md = is_multiplicatively_disjoint(c);
  r.is_sm = is_syntactically_multilinear(c);
  if (c.is_leveled()) r.circuit_width = circuit_width(c);
  if (td) {
    r.td_width = td_width(*td);
    r.td_depth = td_depth(*td);
  }
  return r;
}

}  // namespace twf
