#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "jknet/error.hpp"
#include "jknet/graph.hpp"

using namespace jknet;
using namespace jknet::testing;

namespace {

// Cycle oracle: some vertex reaches itself through a path of length >= 1.
bool cycle_by_dfs(const InteractionMatrix& c) {
  const auto reach = reachability(c);
  for (Vertex v = 0; v < c.size(); ++v)
    if (reach[v][v]) return true;
  return false;
}

// Undirected oracle: DFS over the simple projection, a visited non-parent
// neighbour closes a cycle.
bool undirected_cycle_by_dfs(const InteractionMatrix& c) {
  const std::size_t d = c.size();
  std::vector<int> seen(d, 0);
  std::function<bool(Vertex, Vertex)> visit = [&](Vertex v, Vertex parent) {
    seen[v] = 1;
    for (Vertex w = 0; w < d; ++w) {
      if (w == v || !(c.at(v, w) || c.at(w, v))) continue;
      if (w == parent) continue;
      if (seen[w] || visit(w, v)) return true;
    }
    return false;
  };
  for (Vertex v = 0; v < d; ++v)
    if (!seen[v] && visit(v, d)) return true;
  return false;
}

// Integer matrix power C^n, exact.
std::vector<std::vector<long long>> int_power(const InteractionMatrix& c, std::size_t n) {
  const std::size_t d = c.size();
  std::vector<std::vector<long long>> out(d, std::vector<long long>(d, 0)), tmp = out;
  for (std::size_t i = 0; i < d; ++i) out[i][i] = 1;
  for (std::size_t step = 0; step < n; ++step) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        long long s = 0;
        for (std::size_t k = 0; k < d; ++k) s += c.at(i, k) * out[k][j];
        tmp[i][j] = s;
      }
    out.swap(tmp);
  }
  return out;
}

double dense_spectral_radius(const InteractionMatrix& c) {
  Eigen::MatrixXd m(c.size(), c.size());
  for (Vertex i = 0; i < c.size(); ++i)
    for (Vertex j = 0; j < c.size(); ++j) m(i, j) = c.at(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("interaction matrix rejects self-loops and bad sizes") {
  CHECK_THROWS_AS(InteractionMatrix(1), std::invalid_argument);
  InteractionMatrix c(3);
  CHECK_THROWS_AS(c.set(1, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(c.set(3, 0, true), std::out_of_range);
  c.add_edge(0, 2);
  CHECK(c.at(2, 0));
  CHECK(c.has_edge(0, 2));
  CHECK_FALSE(c.has_edge(2, 0));
  CHECK(c.edges() == std::vector<Edge>{{0, 2}});
}

TEST_CASE("model params derive theta") {
  const auto params = ModelParams::make(200, 0.02);
  CHECK(params.theta() == doctest::Approx(4.0));
  CHECK(ModelParams::from_theta(50, 0.5).p == doctest::Approx(0.01));
  CHECK_THROWS(ModelParams::make(10, 1.5));
  CHECK_THROWS(ModelParams::make(1, 0.5));
}

TEST_CASE("sample_er_digraph") {
  Rng rng = make_stream(11, 0);
  SUBCASE("p = 0 gives the zero matrix") {
    CHECK(sample_er_digraph(ModelParams::make(8, 0.0), rng).empty());
  }
  SUBCASE("p = 1 gives the complete digraph") {
    const auto c = sample_er_digraph(ModelParams::make(8, 1.0), rng);
    CHECK(c.edge_count() == 8 * 7);
    for (Vertex i = 0; i < 8; ++i) CHECK_FALSE(c.at(i, i));
  }
  SUBCASE("edge count matches the binomial mean") {
    const std::size_t d = 200, samples = 500;
    const double p = 0.02, n = d * (d - 1.0);
    double total = 0.0;
    for (std::size_t s = 0; s < samples; ++s)
      total += static_cast<double>(sample_er_digraph(ModelParams::make(d, p), rng).edge_count());
    const double mean = total / samples;
    const double sigma = std::sqrt(n * p * (1 - p) / samples);
    CHECK(std::abs(mean - n * p) <= 3 * sigma);
  }
}

TEST_CASE("resample_vertex touches only row and column j") {
  Rng rng = make_stream(5, 1);
  const auto base = sample_er_digraph(ModelParams::make(9, 0.4), rng);
  for (double p : {0.0, 1.0, 0.3}) {
    const Vertex j = 4;
    const auto out = resample_vertex(base, j, p, rng);
    for (Vertex a = 0; a < 9; ++a)
      for (Vertex b = 0; b < 9; ++b) {
        if (a == b) {
          CHECK_FALSE(out.at(a, b));
        } else if (a != j && b != j) {
          CHECK(out.at(a, b) == base.at(a, b));
        } else if (p == 0.0) {
          CHECK_FALSE(out.at(a, b));
        } else if (p == 1.0) {
          CHECK(out.at(a, b));
        }
      }
  }
  CHECK_THROWS_AS(resample_vertex(base, 9, 0.5, rng), std::out_of_range);
}

TEST_CASE("resample_vertex is deterministic for a fixed seed") {
  Rng rng = make_stream(2024, 0);
  const auto base = sample_er_digraph(ModelParams::make(5, 0.5), rng);
  const auto out = resample_vertex(base, 2, 0.5, rng);
  Rng again = make_stream(2024, 0);
  const auto base2 = sample_er_digraph(ModelParams::make(5, 0.5), again);
  CHECK(resample_vertex(base2, 2, 0.5, again) == out);
  const std::vector<Edge> frozen{{0, 1}, {0, 3}, {1, 0}, {1, 2}, {1, 3}, {1, 4},
                                 {2, 1}, {2, 3}, {3, 0}, {3, 2}, {4, 0}, {4, 1}};
  CHECK(out.edges() == frozen);
}

TEST_CASE("has_directed_cycle") {
  CHECK(has_directed_cycle(example1()));
  CHECK_FALSE(has_directed_cycle(InteractionMatrix(5)));
  CHECK_FALSE(has_directed_cycle(chain(5)));

  Rng rng = make_stream(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 4);
    const auto c = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.05, 0.6)), rng);
    CHECK(has_directed_cycle(c) == cycle_by_dfs(c));
  }
}

TEST_CASE("acyclic graphs are nilpotent") {
  Rng rng = make_stream(3, 1);
  int checked = 0;
  while (checked < 100) {
    const std::size_t d = 2 + uniform_index(rng, 11);
    const auto c = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.05, 0.4)), rng);
    const auto power = int_power(c, d);
    bool zero = true;
    for (const auto& row : power)
      for (long long v : row) zero = zero && v == 0;
    if (!has_directed_cycle(c)) {
      CHECK(zero);
      ++checked;
    } else {
      CHECK_FALSE(zero);
    }
  }
}

TEST_CASE("has_undirected_cycle") {
  InteractionMatrix triangle(3);
  triangle.add_edge(0, 1);
  triangle.add_edge(1, 2);
  triangle.add_edge(2, 0);
  CHECK(has_undirected_cycle(triangle));
  CHECK_FALSE(has_undirected_cycle(chain(4)));

  InteractionMatrix two_cycle(3);
  two_cycle.add_edge(0, 1);
  two_cycle.add_edge(1, 0);
  CHECK_FALSE(has_undirected_cycle(two_cycle));
  CHECK(has_directed_cycle(two_cycle));

  Rng rng = make_stream(4, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 6);
    const auto c = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.05, 0.4)), rng);
    CHECK(has_undirected_cycle(c) == undirected_cycle_by_dfs(c));
  }
}

TEST_CASE("strongly_connected_components") {
  InteractionMatrix c(3);
  c.add_edge(0, 1);
  c.add_edge(1, 0);
  auto sccs = strongly_connected_components(c);
  std::sort(sccs.begin(), sccs.end());
  CHECK(sccs == std::vector<VertexSet>{{0, 1}, {2}});
  Rng complete_rng(1);
  CHECK(is_irreducible(sample_er_digraph(ModelParams::make(6, 1.0), complete_rng)));

  Rng rng = make_stream(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 5);
    const auto g = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.1, 0.6)), rng);
    const auto reach = reachability(g);
    std::vector<std::size_t> comp(d);
    const auto parts = strongly_connected_components(g);
    std::size_t covered = 0;
    for (std::size_t s = 0; s < parts.size(); ++s) {
      covered += parts[s].size();
      for (Vertex v : parts[s]) comp[v] = s;
    }
    CHECK(covered == d);
    for (Vertex a = 0; a < d; ++a)
      for (Vertex b = 0; b < d; ++b) {
        const bool mutual = a == b || (reach[a][b] && reach[b][a]);
        CHECK((comp[a] == comp[b]) == mutual);
      }
  }
}

TEST_CASE("is_acs") {
  const VertexSet all{0, 1, 2};
  CHECK(is_acs(example2(), all));
  CHECK_FALSE(is_acs(InteractionMatrix(3), VertexSet{1}));
  CHECK_THROWS_AS(is_acs(example2(), VertexSet{}), std::invalid_argument);
  CHECK_FALSE(is_acs(example1(), all));  // vertex 2 has no input

  Rng rng = make_stream(6, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 5);
    const auto c = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.1, 0.6)), rng);
    VertexSet subset;
    for (Vertex v = 0; v < d; ++v)
      if (bernoulli(rng, 0.6)) subset.push_back(v);
    if (subset.empty()) continue;
    // Oracle over the edge list.
    std::set<Vertex> fed;
    const std::set<Vertex> members(subset.begin(), subset.end());
    for (const auto& [src, dst] : c.edges())
      if (members.count(src) && members.count(dst)) fed.insert(dst);
    CHECK(is_acs(c, subset) == (fed.size() == subset.size()));
  }
}

TEST_CASE("ACS and cycle implications") {
  Rng rng = make_stream(7, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 7);
    const auto c = sample_er_digraph(ModelParams::make(d, uniform(rng, 0.1, 0.5)), rng);
    VertexSet subset;
    for (Vertex v = 0; v < d; ++v)
      if (bernoulli(rng, 0.7)) subset.push_back(v);
    if (subset.size() < 2) continue;
    const auto sub = induced_subgraph(c, subset);
    // An ACS contains a cycle.
    if (is_acs(c, subset)) CHECK(has_directed_cycle(sub));
    // Irreducible subgraphs are ACSs.
    if (is_irreducible(sub)) CHECK(is_acs(c, subset));
    // Vertex sets of nontrivial components are irreducible.
    for (const auto& s : strongly_connected_components(c)) {
      if (s.size() < 2) continue;
      CHECK(is_irreducible(induced_subgraph(c, s)));
      CHECK(is_acs(c, s));
    }
  }
}

TEST_CASE("terminal_vertices") {
  CHECK(terminal_vertices(chain(2)) == VertexSet{1});
  CHECK(terminal_vertices(InteractionMatrix(4)).empty());

  Rng rng = make_stream(8, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_graph(2 + uniform_index(rng, 5), 0.3, false, rng);
    std::set<Vertex> has_in, has_out;
    for (const auto& [src, dst] : c.edges()) {
      has_out.insert(src);
      has_in.insert(dst);
    }
    VertexSet expected;
    for (Vertex v = 0; v < c.size(); ++v)
      if (has_in.count(v) && !has_out.count(v)) expected.push_back(v);
    CHECK(terminal_vertices(c) == expected);
  }
}

TEST_CASE("path_counts") {
  CHECK(path_counts(chain(3)) == std::vector<std::size_t>{0, 1, 2});
  InteractionMatrix star(3);
  star.add_edge(0, 2);
  star.add_edge(1, 2);
  CHECK(path_counts(star)[2] == 2);
  CHECK_THROWS_AS(path_counts(example1()), CyclicInputError);

  Rng rng = make_stream(9, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_graph(2 + uniform_index(rng, 6), 0.3, false, rng);
    const std::size_t d = c.size();
    // Oracle: i reaches j iff (C^n)_{ji} > 0 for some 1 <= n < d.
    std::vector<std::size_t> expected(d, 0);
    std::vector<std::vector<bool>> reach(d, std::vector<bool>(d, false));
    for (std::size_t n = 1; n < d; ++n) {
      const auto power = int_power(c, n);
      for (Vertex j = 0; j < d; ++j)
        for (Vertex i = 0; i < d; ++i)
          if (power[j][i] > 0) reach[j][i] = true;
    }
    for (Vertex j = 0; j < d; ++j)
      expected[j] = static_cast<std::size_t>(std::count(reach[j].begin(), reach[j].end(), true));
    CHECK(path_counts(c) == expected);
  }
}

TEST_CASE("spectral_radius_pf fixtures") {
  SUBCASE("directed 2-cycle") {
    InteractionMatrix c(2);
    c.add_edge(0, 1);
    c.add_edge(1, 0);
    const auto s = spectral_radius_pf(c);
    CHECK(s.lambda == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(s.pf_basis.size() == 1);
    CHECK(s.pf_basis[0][0] == doctest::Approx(0.5));
    CHECK(s.pf_basis[0][1] == doctest::Approx(0.5));
  }
  SUBCASE("two disjoint 2-cycles") {
    const auto s = spectral_radius_pf(example3());
    CHECK(s.lambda == doctest::Approx(1.0));
    CHECK(s.multiplicity == 2);
    REQUIRE(s.pf_basis.size() == 2);
    const std::vector<double> v1{0.5, 0.5, 0, 0}, v2{0, 0, 0.5, 0.5};
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(s.pf_basis[0][j] == doctest::Approx(v1[j]));
      CHECK(s.pf_basis[1][j] == doctest::Approx(v2[j]));
    }
    CHECK(s.dominant_chain == 1);
  }
  SUBCASE("chained 2-cycles have a single PF direction") {
    const auto s = spectral_radius_pf(example4());
    CHECK(s.multiplicity == 1);
    CHECK(s.dominant_chain == 2);
    const std::vector<double> v{0, 0, 0.5, 0.5};
    for (std::size_t j = 0; j < 4; ++j) CHECK(s.pf_basis[0][j] == doctest::Approx(v[j]));
  }
  SUBCASE("acyclic graphs have lambda 0 and no basis") {
    const auto s = spectral_radius_pf(chain(4));
    CHECK(s.lambda == 0.0);
    CHECK(s.pf_basis.empty());
  }
}

TEST_CASE("spectral_radius_pf agrees with a dense eigensolve") {
  Rng rng = make_stream(10, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 5);
    const auto c = random_graph(d, uniform(rng, 0.2, 0.8), true, rng);
    const auto s = spectral_radius_pf(c);
    CHECK(std::abs(s.lambda - dense_spectral_radius(c)) <= 1e-8);
    CHECK(s.lambda >= 1.0 - 1e-10);
    REQUIRE(!s.pf_basis.empty());
    for (const auto& v : s.pf_basis) {
      double norm = 0.0, residual = 0.0;
      for (Vertex i = 0; i < d; ++i) {
        CHECK(v[i] >= 0.0);
        norm += v[i];
        double cv = 0.0;
        for (Vertex j = 0; j < d; ++j) cv += c.at(i, j) * v[j];
        residual += std::abs(cv - s.lambda * v[i]);
      }
      CHECK(norm == doctest::Approx(1.0));
      CHECK(residual <= 1e-9);
      // The support of a PF eigenvector is an ACS.
      CHECK(is_acs(c, acs_from_eigenvector(c, v)));
    }
  }
}

TEST_CASE("acs_from_eigenvector") {
  InteractionMatrix c(4);
  c.add_edge(0, 1);
  c.add_edge(1, 0);
  const std::vector<double> v{0.5, 0.5, 0.0, 0.0};
  CHECK(acs_from_eigenvector(c, v) == VertexSet{0, 1});
  const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(acs_from_eigenvector(example2(), third) == VertexSet{0, 1, 2});
  const std::vector<double> zero(4, 0.0);
  CHECK_THROWS_AS(acs_from_eigenvector(c, zero), std::invalid_argument);
}
