#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "jknet/adaptation.hpp"
#include "jknet/graph.hpp"
#include "jknet/rng.hpp"

namespace jknet {

// Runs fn(0..trials-1) on up to `jobs` threads. Results are stored by index,
// so the output never depends on scheduling.
template <class T, class Fn>
std::vector<T> run_trials(std::size_t trials, std::size_t jobs, Fn fn) {
  std::vector<T> out(trials);
  jobs = std::max<std::size_t>(1, std::min(jobs, trials));
  if (jobs == 1) {
    for (std::size_t t = 0; t < trials; ++t) out[t] = fn(t);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < trials;) {
      try {
        out[t] = fn(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Seed for a sub-experiment (a grid point, a model variant) of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

struct ExperimentResult {
  std::string kind;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<double> per_trial;
  std::vector<bool> censored;
  std::size_t censored_count = 0;
  bool include_censored = false;  // aggregate over censored trials too
  std::size_t used = 0;           // trials entering mean/variance
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double std_error = 0.0;
  double median = 0.0;  // over all trials, censored ones at their cap
  std::optional<double> oracle_value;
  std::optional<double> z_score;
  // Summed over the adaptive runs behind the trials; zero elsewhere.
  std::size_t preservation_violations = 0;
  std::size_t min_set_mismatches = 0;

  std::size_t trials() const { return per_trial.size(); }
};

// Fills the aggregate fields from per_trial/censored.
void summarize(ExperimentResult& r);

struct ExperimentOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t max_steps = 10000;
  bool include_censored = false;
};

// Cycle-count law for ER_d(theta/d).
double oracle_cycle_mean(double theta, std::size_t k);
double directed_orientation_fraction(std::size_t k);
// Fraction of `samples` uniformly oriented k-cycles that are directed cycles.
double orientation_monte_carlo(std::size_t k, std::size_t samples, Rng& rng);

using AdjacencyList = std::vector<std::vector<Vertex>>;

// Undirected G(d, p) by geometric skipping over the d(d-1)/2 pairs.
AdjacencyList sample_undirected_er(std::size_t d, double p, Rng& rng);

constexpr std::size_t max_cycle_length = 8;

// Number of simple cycles of length exactly k (3 <= k <= max_cycle_length).
std::size_t count_cycles(const AdjacencyList& g, std::size_t k);

ExperimentResult measure_cycle_counts(std::size_t d, double theta, std::size_t k, const ExperimentOptions& opts);

// Edge processes on d vertices, stopped when the first cycle closes. The
// return value counts accepted edges including the closing one. When
// `sequence` is given it receives the edges in order.
std::size_t first_cycle_uniform_model(std::size_t d, Rng& rng, std::vector<Edge>* sequence = nullptr);
std::size_t first_cycle_permutation_model(std::size_t d, Rng& rng, std::vector<Edge>* sequence = nullptr);

enum class CycleKind { directed, undirected };
std::string_view to_string(CycleKind kind);
CycleKind cycle_kind_from_string(std::string_view s);

enum class EdgeModel { jk, uniform, permutation };
std::string_view to_string(EdgeModel model);
EdgeModel edge_model_from_string(std::string_view s);

// Edges at first cycle divided by d, per trial.
ExperimentResult first_cycle_edge_model(std::size_t d, EdgeModel model, const ExperimentOptions& opts);

// JK steps until the first cycle of the given kind; censored at max_steps.
ExperimentResult first_cycle_time_jk(std::size_t d, double p, CycleKind kind, const ExperimentOptions& opts,
                                     const AdaptiveOptions& adaptive = {});

// Heuristic probability that one resampling closes a cycle: 1 - e^{-dp}(1 + dp).
double oracle_cycle_prob_one_step(double dp);
double oracle_attach_prob(std::size_t k, double p);
double oracle_mean_waiting(std::size_t k, double p);

struct TotalGrowth {
  double exact_sum = 0.0;
  // Integral of 1/(1 - (1-p)^x) over [1, d], from its antiderivative
  // x - ln(1 - (1-p)^x) / ln(1-p).
  double integral_approx = 0.0;
  double relative_gap = 0.0;  // |exact - integral| / exact
  // d - 1 - (1 - (1-p)^d)/ln(1-p) + p/ln(1-p), a published closed form for the
  // integral. It does not integrate the summand and is kept for comparison.
  double printed_closed_form = 0.0;
};
TotalGrowth oracle_total_growth(std::size_t d, double p);

// Steps until one of k Bernoulli(p) trials per step succeeds.
ExperimentResult waiting_time(std::size_t k, double p, const ExperimentOptions& opts);

// JK steps from an ER graph with a planted cycle until the whole graph is an ACS.
ExperimentResult acs_growth_time_jk(std::size_t d, double p, const ExperimentOptions& opts,
                                    std::size_t planted_cycle = 2, const AdaptiveOptions& adaptive = {});

struct ScalingFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares of log y on log x.
ScalingFit scaling_fit(const std::vector<double>& xs, const std::vector<double>& ys);

struct ScanRow {
  std::size_t d = 0;
  double p = 0.0;
  double theta = 0.0;
  ExperimentResult first_cycle;
  ExperimentResult full_acs;
  TotalGrowth growth_oracle;
};

struct ConjectureScan {
  double theta = 0.0;
  std::vector<ScanRow> rows;
  std::optional<ScalingFit> first_cycle_fit;
  std::optional<ScalingFit> full_acs_fit;
  bool first_cycle_increasing = false;
};

// Fixed theta, p = theta / d over the grid; first-cycle and full-ACS times per d.
ConjectureScan conjecture_scan(double theta, const std::vector<std::size_t>& d_grid, const ExperimentOptions& opts,
                               const AdaptiveOptions& adaptive = {});

}  // namespace jknet
