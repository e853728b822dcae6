#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "jknet/experiments.hpp"

using namespace jknet;
using namespace jknet::testing;

namespace {

// Cycles of length k by brute force: for every k-subset, count the distinct
// Hamiltonian cycles of the induced subgraph (fixed start, halved for direction).
std::size_t brute_force_cycles(const AdjacencyList& g, std::size_t k) {
  const std::size_t d = g.size();
  auto adjacent = [&](Vertex a, Vertex b) { return std::binary_search(g[a].begin(), g[a].end(), b); };
  std::size_t total = 0;
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<Vertex> vs;
    for (Vertex v = 0; v < d; ++v)
      if (mask >> v & 1u) vs.push_back(v);
    std::size_t found = 0;
    do {
      if (vs[0] != *std::min_element(vs.begin(), vs.end())) continue;
      bool ok = true;
      for (std::size_t i = 0; i < k && ok; ++i) ok = adjacent(vs[i], vs[(i + 1) % k]);
      if (ok) ++found;
    } while (std::next_permutation(vs.begin() + 1, vs.end()));
    total += found / 2;
  }
  return total;
}

AdjacencyList random_simple_graph(std::size_t d, double p, Rng& rng) {
  AdjacencyList g(d);
  for (Vertex a = 0; a < d; ++a)
    for (Vertex b = a + 1; b < d; ++b)
      if (bernoulli(rng, p)) {
        g[a].push_back(b);
        g[b].push_back(a);
      }
  for (auto& n : g) std::sort(n.begin(), n.end());
  return g;
}

// Replays an edge sequence, recomputing from scratch by DFS whether the
// multigraph so far contains a cycle. Returns the 1-based index of the edge
// that first closes one, or 0.
std::size_t dfs_first_cycle(std::size_t d, const std::vector<Edge>& seq) {
  std::vector<Edge> so_far;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    so_far.push_back(seq[n]);
    // A multigraph is a forest iff it has no self-loop and every component
    // with v vertices has v - 1 edges; check the latter by DFS.
    std::vector<std::vector<Vertex>> adj(d);
    bool cyclic = false;
    for (auto [a, b] : so_far) {
      if (a == b) cyclic = true;
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<int> seen(d, 0);
    for (Vertex s = 0; s < d && !cyclic; ++s) {
      if (seen[s]) continue;
      std::size_t vertices = 0, degree_sum = 0;
      std::vector<Vertex> stack{s};
      seen[s] = 1;
      while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        ++vertices;
        degree_sum += adj[v].size();
        for (Vertex w : adj[v])
          if (!seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
      }
      if (degree_sum / 2 >= vertices) cyclic = true;
    }
    if (cyclic) return n + 1;
  }
  return 0;
}

double binomial(double n, double k) {
  return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1));
}

}  // namespace

TEST_CASE("cycle-count oracle") {
  CHECK(oracle_cycle_mean(1.0, 3) == doctest::Approx(1.0 / 6));
  CHECK(oracle_cycle_mean(1.0, 4) == doctest::Approx(1.0 / 8));
  CHECK(oracle_cycle_mean(0.0, 5) == 0.0);
  CHECK_THROWS(oracle_cycle_mean(1.0, 2));
}

TEST_CASE("count_cycles matches exhaustive subgraph enumeration") {
  Rng rng = make_stream(40, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 3 + uniform_index(rng, 6);
    const auto g = random_simple_graph(d, uniform(rng, 0.2, 0.9), rng);
    for (std::size_t k = 3; k <= d; ++k) CHECK(count_cycles(g, k) == brute_force_cycles(g, k));
  }
  AdjacencyList k4(4);
  for (Vertex a = 0; a < 4; ++a)
    for (Vertex b = 0; b < 4; ++b)
      if (a != b) k4[a].push_back(b);
  CHECK(count_cycles(k4, 3) == 4);
  CHECK(count_cycles(k4, 4) == 3);
  CHECK_THROWS(count_cycles(k4, 2));
  CHECK_THROWS(count_cycles(k4, max_cycle_length + 1));
}

TEST_CASE("undirected ER sampler") {
  Rng rng = make_stream(41, 0);
  CHECK(sample_undirected_er(10, 0.0, rng) == AdjacencyList(10));
  const auto full = sample_undirected_er(6, 1.0, rng);
  for (const auto& n : full) CHECK(n.size() == 5);
  const std::size_t d = 300, samples = 300;
  const double p = 0.01, pairs = d * (d - 1) / 2.0;
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto g = sample_undirected_er(d, p, rng);
    std::size_t degree = 0;
    for (Vertex v = 0; v < d; ++v) {
      degree += g[v].size();
      CHECK(std::adjacent_find(g[v].begin(), g[v].end()) == g[v].end());
      CHECK_FALSE(std::binary_search(g[v].begin(), g[v].end(), v));
    }
    total += degree / 2.0;
  }
  CHECK(std::abs(total / samples - pairs * p) <= 3 * std::sqrt(pairs * p * (1 - p) / samples));
}

TEST_CASE("triangle counts match the exact expectation") {
  ExperimentOptions opts;
  opts.trials = 600;
  opts.seed = 5;
  const std::size_t d = 200;
  const double theta = 1.5, p = theta / d;
  const auto r = measure_cycle_counts(d, theta, 3, opts);
  const double exact = binomial(d, 3) * p * p * p;
  CHECK(std::abs(r.mean - exact) <= 3 * r.std_error);
  CHECK(r.oracle_value == doctest::Approx(oracle_cycle_mean(theta, 3)));
}

TEST_CASE("orientation fraction") {
  CHECK(directed_orientation_fraction(3) == doctest::Approx(0.25));
  CHECK(directed_orientation_fraction(2) == doctest::Approx(0.5));
  // Exhaustive over all 2^k orientations.
  for (std::size_t k = 2; k <= 10; ++k) {
    std::size_t directed = 0;
    for (std::uint32_t o = 0; o < (1u << k); ++o)
      if (o == 0 || o == (1u << k) - 1) ++directed;
    CHECK(directed_orientation_fraction(k) == doctest::Approx(double(directed) / (1u << k)));
  }
  Rng rng = make_stream(42, 0);
  const std::size_t n = 1000000;
  const double q = 1.0 / 16;
  CHECK(std::abs(orientation_monte_carlo(5, n, rng) - q) <= 3 * std::sqrt(q * (1 - q) / n));
}

TEST_CASE("first-cycle edge processes agree with a DFS replay") {
  Rng rng = make_stream(43, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 3 + uniform_index(rng, 6);
    std::vector<Edge> seq;
    const std::size_t n = first_cycle_uniform_model(d, rng, &seq);
    CHECK(seq.size() == n);
    CHECK(dfs_first_cycle(d, seq) == n);

    seq.clear();
    const std::size_t m = first_cycle_permutation_model(d, rng, &seq);
    CHECK(seq.size() == m);
    CHECK(dfs_first_cycle(d, seq) == m);
    std::set<Edge> distinct(seq.begin(), seq.end());
    CHECK(distinct.size() == seq.size());
    for (auto [a, b] : seq) CHECK(a < b);
    CHECK(m <= d);  // a forest on d vertices has at most d - 1 edges
  }
}

TEST_CASE("first-cycle edge processes at moderate size") {
  ExperimentOptions opts;
  opts.trials = 200;
  opts.seed = 8;
  const auto u = first_cycle_edge_model(1000, EdgeModel::uniform, opts);
  const auto p = first_cycle_edge_model(1000, EdgeModel::permutation, opts);
  CHECK(u.mean > 0.2);
  CHECK(u.mean < 0.5);
  CHECK(p.mean > 0.3);
  CHECK(p.mean < 0.55);
  CHECK_THROWS(first_cycle_edge_model(1000, EdgeModel::jk, opts));
}

TEST_CASE("one-step cycle probability") {
  CHECK(oracle_cycle_prob_one_step(2.0) == doctest::Approx(1 - 3 * std::exp(-2.0)));
  CHECK(oracle_cycle_prob_one_step(2.0) == doctest::Approx(0.5940).epsilon(1e-4));
  CHECK(oracle_cycle_prob_one_step(1e-6) < 1e-11);
  CHECK(oracle_cycle_prob_one_step(60.0) == doctest::Approx(1.0));
  CHECK_THROWS(oracle_cycle_prob_one_step(0.0));
}

TEST_CASE("attachment probability and mean waiting time") {
  CHECK(oracle_attach_prob(1, 0.3) == doctest::Approx(0.3));
  CHECK(oracle_attach_prob(10, 0.01) == doctest::Approx(0.09562).epsilon(1e-4));
  CHECK(oracle_mean_waiting(1, 0.5) == doctest::Approx(2.0));
  CHECK(oracle_mean_waiting(10, 0.01) == doctest::Approx(10.458).epsilon(1e-4));
  CHECK_THROWS(oracle_mean_waiting(3, 0.0));
  for (std::size_t k : {1, 2, 5, 10, 40})
    for (double p : {0.001, 0.01, 0.2, 0.7}) {
      double sum = 0.0;
      for (std::size_t i = 1; i <= k; ++i)
        sum += binomial(double(k), double(i)) * std::pow(p, double(i)) * std::pow(1 - p, double(k - i));
      CHECK(std::abs(sum - oracle_attach_prob(k, p)) <= 1e-12);
    }
}

TEST_CASE("total growth oracle") {
  CHECK(oracle_total_growth(1, 0.2).exact_sum == doctest::Approx(5.0));
  const auto g = oracle_total_growth(100, 0.005);
  CHECK(g.relative_gap <= 0.15);
  // The published closed form, instantiated directly.
  const double lq = std::log(0.995);
  CHECK(g.printed_closed_form == doctest::Approx(99 - (1 - std::pow(0.995, 100)) / lq + 0.005 / lq));
  CHECK(g.printed_closed_form < 0.2 * g.exact_sum);
  // Numerical quadrature of the same integral.
  double quad = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = 1.0 + 99.0 * (i + 0.5) / n;
    quad += 99.0 / n / (1 - std::pow(0.995, x));
  }
  CHECK(g.integral_approx == doctest::Approx(quad).epsilon(1e-6));
  // Growth per vertex at fixed theta changes by under 20% per doubling of d.
  const double a = oracle_total_growth(100, 0.005).exact_sum / 100;
  const double b = oracle_total_growth(200, 0.0025).exact_sum / 200;
  const double c = oracle_total_growth(400, 0.00125).exact_sum / 400;
  CHECK(b / a < 1.2);
  CHECK(c / b < 1.2);
}

TEST_CASE("waiting-time Monte Carlo") {
  ExperimentOptions opts;
  opts.trials = 20000;
  opts.seed = 7;
  const auto r = waiting_time(10, 0.01, opts);
  CHECK(r.censored_count == 0);
  CHECK(std::abs(*r.z_score) <= 3.0);
  CHECK(r.std_error == doctest::Approx(std::sqrt(r.variance / r.trials())));
}

TEST_CASE("scaling_fit") {
  const std::vector<double> xs{1, 2, 4, 8, 16};
  std::vector<double> ys = xs;
  auto fit = scaling_fit(xs, ys);
  CHECK(fit.slope == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  for (auto& y : ys) y *= y;
  CHECK(scaling_fit(xs, ys).slope == doctest::Approx(2.0));

  Rng rng = make_stream(44, 0);
  std::vector<double> gx, gy;
  for (int i = 1; i <= 30; ++i) {
    gx.push_back(i * 10.0);
    gy.push_back(3 * std::pow(i * 10.0, 1.5) * (1 + uniform(rng, -0.05, 0.05)));
  }
  fit = scaling_fit(gx, gy);
  CHECK(fit.slope >= 1.4);
  CHECK(fit.slope <= 1.6);
  CHECK_THROWS(scaling_fit({1, 2}, {1, 2}));
  CHECK_THROWS(scaling_fit({1, 2, 3}, {1, 0, 3}));
  CHECK_THROWS(scaling_fit({1, 3, 2}, {1, 2, 3}));
}

TEST_CASE("summaries exclude censored trials unless asked") {
  ExperimentResult r;
  r.per_trial = {1, 2, 3, 100};
  r.censored = {false, false, false, true};
  r.oracle_value = 2.0;
  summarize(r);
  CHECK(r.censored_count == 1);
  CHECK(r.used == 3);
  CHECK(r.mean == doctest::Approx(2.0));
  CHECK(r.variance == doctest::Approx(1.0));
  CHECK(r.median == doctest::Approx(2.5));
  CHECK(*r.z_score == doctest::Approx(0.0));
  r.include_censored = true;
  summarize(r);
  CHECK(r.mean == doctest::Approx(26.5));
}

TEST_CASE("trial results do not depend on the worker count") {
  ExperimentOptions one, many;
  one.trials = many.trials = 40;
  one.seed = many.seed = 12;
  many.jobs = 6;
  CHECK(waiting_time(5, 0.05, one).per_trial == waiting_time(5, 0.05, many).per_trial);
  one.max_steps = many.max_steps = 5000;
  const auto a = first_cycle_time_jk(12, 0.05, CycleKind::directed, one);
  const auto b = first_cycle_time_jk(12, 0.05, CycleKind::directed, many);
  CHECK(a.per_trial == b.per_trial);
  CHECK(a.mean == b.mean);

  CHECK_THROWS(run_trials<int>(10, 3, [](std::size_t t) -> int {
    if (t == 7) throw std::runtime_error("boom");
    return 0;
  }));
}

TEST_CASE("JK event times at the extremes") {
  ExperimentOptions opts;
  opts.trials = 10;
  opts.max_steps = 50;
  const auto fc = first_cycle_time_jk(8, 1.0, CycleKind::directed, opts);
  for (double s : fc.per_trial) CHECK(s == 0.0);
  const auto acs = acs_growth_time_jk(8, 1.0, opts);
  for (double s : acs.per_trial) CHECK(s <= 1.0);
  const auto none = first_cycle_time_jk(8, 0.0, CycleKind::undirected, opts);
  CHECK(none.censored_count == 10);
  CHECK(none.used == 0);
}

TEST_CASE("first-cycle time grows with d at fixed theta") {
  ExperimentOptions opts;
  opts.trials = 60;
  opts.seed = 3;
  opts.max_steps = 200000;
  const auto scan = conjecture_scan(0.5, {10, 20, 40}, opts);
  REQUIRE(scan.rows.size() == 3);
  CHECK(scan.first_cycle_increasing);
  REQUIRE(scan.full_acs_fit);
  CHECK(scan.full_acs_fit->slope > 0.5);
  for (const auto& row : scan.rows) CHECK(row.full_acs.censored_count == 0);
}
