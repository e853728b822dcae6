#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "jknet/rng.hpp"

namespace jknet {

using Vertex = std::size_t;
// Sorted, duplicate-free list of vertex indices.
using VertexSet = std::vector<Vertex>;
// Directed edge (src, dst).
using Edge = std::pair<Vertex, Vertex>;

// Binary d x d catalysis matrix C with c(i, j) == 1 meaning an edge j -> i
// (species j catalyzes species i). The diagonal is always zero.
class InteractionMatrix {
 public:
  explicit InteractionMatrix(std::size_t d);

  // Edges are given as (src, dst); src -> dst sets c(dst, src).
  static InteractionMatrix from_edges(std::size_t d, std::span<const Edge> edges);

  std::size_t size() const noexcept { return d_; }

  bool at(Vertex i, Vertex j) const { return c_[index(i, j)] != 0; }
  void set(Vertex i, Vertex j, bool value);

  bool has_edge(Vertex src, Vertex dst) const { return at(dst, src); }
  void add_edge(Vertex src, Vertex dst) { set(dst, src, true); }

  std::size_t edge_count() const noexcept;
  bool empty() const noexcept { return edge_count() == 0; }

  // All (src, dst) pairs, ordered by src then dst.
  std::vector<Edge> edges() const;
  std::vector<Vertex> successors(Vertex j) const;    // i with j -> i
  std::vector<Vertex> predecessors(Vertex i) const;  // j with j -> i

  // Row-major entries, c(i, j) at i * d + j.
  std::span<const std::uint8_t> data() const noexcept { return c_; }

  friend bool operator==(const InteractionMatrix&, const InteractionMatrix&) = default;

 private:
  std::size_t index(Vertex i, Vertex j) const;

  std::size_t d_;
  std::vector<std::uint8_t> c_;
};

struct ModelParams {
  std::size_t d;
  double p;

  // Validates d >= 2 and p in [0, 1]. The endpoints are accepted so that test
  // fixtures can force empty and complete graphs.
  static ModelParams make(std::size_t d, double p);
  static ModelParams from_theta(std::size_t d, double theta);

  double theta() const noexcept { return p * static_cast<double>(d); }
};

struct GraphAnalysis {
  std::vector<VertexSet> sccs;
  bool acyclic = true;
  VertexSet terminal_set;
  // Ancestor counts; only filled for acyclic graphs.
  std::vector<std::size_t> path_counts;
  bool directed_cycle_present = false;
  bool undirected_cycle_present = false;
};

struct SpectralOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 100000;
};

struct SpectralData {
  double lambda = 0.0;
  // Extremal non-negative eigenvectors for lambda, unit 1-norm, one per
  // distinguished strongly connected class.
  std::vector<std::vector<double>> pf_basis;
  std::size_t multiplicity = 0;
  // Longest chain of classes with spectral radius lambda along a path of the
  // condensation. Values above 1 mean a nontrivial Jordan block for lambda.
  std::size_t dominant_chain = 0;
};

InteractionMatrix sample_er_digraph(const ModelParams& params, Rng& rng);

// Redraws the off-diagonal entries of row j and column j with Bernoulli(p).
InteractionMatrix resample_vertex(const InteractionMatrix& c, Vertex j, double p, Rng& rng);

bool has_directed_cycle(const InteractionMatrix& c);

// Cycle in the simple undirected projection. A lone directed 2-cycle is a
// double edge there and does not count.
bool has_undirected_cycle(const InteractionMatrix& c);

// Tarjan. Components come out in reverse topological order of the
// condensation (sinks first); each component is sorted.
std::vector<VertexSet> strongly_connected_components(const InteractionMatrix& c);

bool is_irreducible(const InteractionMatrix& c);

// Every vertex of the subset has an incoming edge from another subset vertex.
bool is_acs(const InteractionMatrix& c, std::span<const Vertex> subset);

// Support {j : v_j > threshold}; throws if that support is not an ACS.
VertexSet acs_from_eigenvector(const InteractionMatrix& c, std::span<const double> v,
                               double threshold = 0.0);

// Vertices with at least one incoming and no outgoing edge.
VertexSet terminal_vertices(const InteractionMatrix& c);

// p(j) = number of i != j with a directed path i -> j. Throws CyclicInputError.
std::vector<std::size_t> path_counts(const InteractionMatrix& c);

// Vertices reachable from any vertex in `sources` (sources included).
std::vector<bool> reachable_from(const InteractionMatrix& c, std::span<const Vertex> sources);

// Induced subgraph on `subset` (at least 2 vertices), relabelled in subset order.
InteractionMatrix induced_subgraph(const InteractionMatrix& c, std::span<const Vertex> subset);

SpectralData spectral_radius_pf(const InteractionMatrix& c, const SpectralOptions& opts = {});

GraphAnalysis analyze(const InteractionMatrix& c);

}  // namespace jknet
