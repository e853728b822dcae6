#pragma once

#include <cmath>
#include <vector>

#include "jknet/dynamics.hpp"
#include "jknet/graph.hpp"

namespace jknet::testing {

// The four worked examples, 0-based. c(i, j) = 1 means edge j -> i.
inline InteractionMatrix example1() {
  const std::vector<Edge> e{{0, 1}, {1, 0}, {2, 0}};
  return InteractionMatrix::from_edges(3, e);
}
inline InteractionMatrix example2() {
  const std::vector<Edge> e{{0, 1}, {1, 0}, {0, 2}};
  return InteractionMatrix::from_edges(3, e);
}
inline InteractionMatrix example3() {
  const std::vector<Edge> e{{0, 1}, {1, 0}, {2, 3}, {3, 2}};
  return InteractionMatrix::from_edges(4, e);
}
inline InteractionMatrix example4() {
  const std::vector<Edge> e{{0, 1}, {1, 0}, {2, 3}, {3, 2}, {0, 2}};
  return InteractionMatrix::from_edges(4, e);
}

inline InteractionMatrix chain(std::size_t d) {
  InteractionMatrix c(d);
  for (Vertex v = 0; v + 1 < d; ++v) c.add_edge(v, v + 1);
  return c;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

// Reachability closure by Floyd-Warshall: reach[a][b] iff a path a -> b of
// length >= 1 exists.
inline std::vector<std::vector<bool>> reachability(const InteractionMatrix& c) {
  const std::size_t d = c.size();
  std::vector<std::vector<bool>> reach(d, std::vector<bool>(d, false));
  for (Vertex a = 0; a < d; ++a)
    for (Vertex b = 0; b < d; ++b) reach[a][b] = c.has_edge(a, b);
  for (Vertex k = 0; k < d; ++k)
    for (Vertex a = 0; a < d; ++a)
      for (Vertex b = 0; b < d; ++b)
        if (reach[a][k] && reach[k][b]) reach[a][b] = true;
  return reach;
}

inline Vec random_simplex_point(std::size_t d, Rng& rng) {
  Vec x(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = -std::log(1.0 - uniform01(rng));
  return x / x.sum();
}

// Rejection-samples an ER digraph with (want_cycle ? a : no) directed cycle
// and at least one edge.
inline InteractionMatrix random_graph(std::size_t d, double p, bool want_cycle, Rng& rng) {
  for (;;) {
    InteractionMatrix c = sample_er_digraph(ModelParams::make(d, p), rng);
    if (!c.empty() && has_directed_cycle(c) == want_cycle) return c;
  }
}

}  // namespace jknet::testing
