#include "jknet/experiments.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace jknet {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

void summarize(ExperimentResult& r) {
  const std::size_t n = r.per_trial.size();
  if (r.censored.size() != n) r.censored.resize(n, false);
  r.censored_count = static_cast<std::size_t>(std::count(r.censored.begin(), r.censored.end(), true));

  std::vector<double> used;
  for (std::size_t t = 0; t < n; ++t)
    if (r.include_censored || !r.censored[t]) used.push_back(r.per_trial[t]);
  r.used = used.size();
  r.mean = r.variance = r.std_error = 0.0;
  if (!used.empty()) {
    // Sum in index order so the result does not depend on which thread ran what.
    r.mean = std::accumulate(used.begin(), used.end(), 0.0) / static_cast<double>(used.size());
    if (used.size() > 1) {
      double ss = 0.0;
      for (double v : used) ss += (v - r.mean) * (v - r.mean);
      r.variance = ss / static_cast<double>(used.size() - 1);
    }
    r.std_error = std::sqrt(r.variance / static_cast<double>(used.size()));
  }
  r.median = 0.0;
  if (n > 0) {
    std::vector<double> sorted = r.per_trial;
    std::sort(sorted.begin(), sorted.end());
    r.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  r.z_score.reset();
  if (r.oracle_value && r.std_error > 0.0) r.z_score = (r.mean - *r.oracle_value) / r.std_error;
}

namespace {

void check_trials(const ExperimentOptions& opts) {
  if (opts.trials < 1) throw std::invalid_argument("trials must be >= 1");
}

ExperimentResult start(std::string kind, const ExperimentOptions& opts,
                       std::vector<std::pair<std::string, double>> parameters) {
  ExperimentResult r;
  r.kind = std::move(kind);
  r.parameters = std::move(parameters);
  r.parameters.emplace_back("trials", static_cast<double>(opts.trials));
  r.parameters.emplace_back("seed", static_cast<double>(opts.seed));
  r.include_censored = opts.include_censored;
  return r;
}

struct Measurement {
  double value = 0.0;
  bool censored = false;
  std::size_t preservation_violations = 0;
  std::size_t min_set_mismatches = 0;
};

Measurement adaptive_measurement(const AdaptiveTrace& trace, std::optional<std::size_t> event, std::size_t cap) {
  Measurement m{event ? static_cast<double>(*event) : static_cast<double>(cap), !event};
  m.preservation_violations = trace.preservation_violations;
  m.min_set_mismatches = trace.min_set_mismatches;
  return m;
}

void absorb(ExperimentResult& r, const std::vector<Measurement>& ms) {
  for (const auto& m : ms) {
    r.per_trial.push_back(m.value);
    r.censored.push_back(m.censored);
    r.preservation_violations += m.preservation_violations;
    r.min_set_mismatches += m.min_set_mismatches;
  }
  summarize(r);
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t v) {
    while (parent_[v] != v) v = parent_[v] = parent_[parent_[v]];
    return v;
  }
  // False when a and b were already joined.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

}  // namespace

double oracle_cycle_mean(double theta, std::size_t k) {
  if (k < 3) throw std::invalid_argument("cycle length must be >= 3");
  if (theta < 0.0) throw std::invalid_argument("theta must be non-negative");
  return std::pow(theta, static_cast<double>(k)) / (2.0 * static_cast<double>(k));
}

double directed_orientation_fraction(std::size_t k) {
  if (k < 2) throw std::invalid_argument("cycle length must be >= 2");
  return std::ldexp(1.0, 1 - static_cast<int>(k));
}

double orientation_monte_carlo(std::size_t k, std::size_t samples, Rng& rng) {
  if (k < 2 || samples == 0) throw std::invalid_argument("need k >= 2 and samples >= 1");
  std::size_t directed = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t forward = 0;
    for (std::size_t e = 0; e < k; ++e) forward += bernoulli(rng, 0.5);
    if (forward == 0 || forward == k) ++directed;
  }
  return static_cast<double>(directed) / static_cast<double>(samples);
}

AdjacencyList sample_undirected_er(std::size_t d, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  AdjacencyList g(d);
  if (p == 0.0 || d < 2) return g;
  auto add = [&](std::size_t v, std::size_t w) {
    g[v].push_back(w);
    g[w].push_back(v);
  };
  if (p == 1.0) {
    for (std::size_t v = 1; v < d; ++v)
      for (std::size_t w = 0; w < v; ++w) add(v, w);
  } else {
    // Batagelj-Brandes skipping over the lower triangle.
    const double log_q = std::log1p(-p);
    std::size_t v = 1;
    long long w = -1;
    while (v < d) {
      const double r = uniform01(rng);
      w += 1 + static_cast<long long>(std::floor(std::log1p(-r) / log_q));
      while (w >= static_cast<long long>(v) && v < d) {
        w -= static_cast<long long>(v);
        ++v;
      }
      if (v < d) add(v, static_cast<std::size_t>(w));
    }
  }
  for (auto& nbrs : g) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

std::size_t count_cycles(const AdjacencyList& g, std::size_t k) {
  if (k < 3 || k > max_cycle_length)
    throw std::invalid_argument("cycle length must lie in [3, " + std::to_string(max_cycle_length) + "]");
  const std::size_t d = g.size();
  std::vector<char> on_path(d, 0);
  std::size_t closed = 0;
  // Every cycle is found twice from its smallest vertex, once per direction.
  for (Vertex s = 0; s < d; ++s) {
    std::vector<std::pair<Vertex, std::size_t>> stack{{s, 0}};  // (vertex, next neighbour index)
    on_path[s] = 1;
    while (!stack.empty()) {
      auto& [v, idx] = stack.back();
      if (idx == g[v].size()) {
        on_path[v] = 0;
        stack.pop_back();
        continue;
      }
      const Vertex w = g[v][idx++];
      if (w == s && stack.size() == k) {
        ++closed;
      } else if (w > s && !on_path[w] && stack.size() < k) {
        on_path[w] = 1;
        stack.emplace_back(w, 0);
      }
    }
  }
  return closed / 2;
}

ExperimentResult measure_cycle_counts(std::size_t d, double theta, std::size_t k, const ExperimentOptions& opts) {
  check_trials(opts);
  if (k < 3 || k > max_cycle_length) throw std::invalid_argument("unsupported cycle length");
  const double p = theta / static_cast<double>(d);
  if (!(p < 1.0)) throw std::invalid_argument("theta/d must be below 1");
  auto r = start("cycle_dist", opts, {{"d", double(d)}, {"theta", theta}, {"p", p}, {"k", double(k)}});
  r.oracle_value = oracle_cycle_mean(theta, k);
  absorb(r, run_trials<Measurement>(opts.trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(opts.seed, t);
    return Measurement{static_cast<double>(count_cycles(sample_undirected_er(d, p, rng), k)), false};
  }));
  return r;
}

std::size_t first_cycle_uniform_model(std::size_t d, Rng& rng, std::vector<Edge>* sequence) {
  if (d < 3) throw std::invalid_argument("d must be >= 3");
  // Multigraph process. A repeated pair is already joined in the forest built
  // so far, so union-find also catches double edges; self-loops close at once.
  DisjointSets sets(d);
  for (std::size_t edges = 1;; ++edges) {
    const Vertex i = uniform_index(rng, d), j = uniform_index(rng, d);
    if (sequence) sequence->emplace_back(i, j);
    if (i == j || !sets.unite(i, j)) return edges;
  }
}

std::size_t first_cycle_permutation_model(std::size_t d, Rng& rng, std::vector<Edge>* sequence) {
  if (d < 3) throw std::invalid_argument("d must be >= 3");
  // Drawing distinct pairs uniformly without replacement walks a uniformly
  // random ordering of all pairs.
  DisjointSets sets(d);
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t edges = 1;; ++edges) {
    Vertex i, j;
    do {
      i = uniform_index(rng, d);
      j = uniform_index(rng, d - 1);
      if (j >= i) ++j;
      if (i > j) std::swap(i, j);
    } while (!seen.insert(static_cast<std::uint64_t>(i) * d + j).second);
    if (sequence) sequence->emplace_back(i, j);
    if (!sets.unite(i, j)) return edges;
  }
}

std::string_view to_string(CycleKind kind) { return kind == CycleKind::directed ? "directed" : "undirected"; }

CycleKind cycle_kind_from_string(std::string_view s) {
  if (s == "directed") return CycleKind::directed;
  if (s == "undirected") return CycleKind::undirected;
  throw std::invalid_argument("unknown cycle kind '" + std::string(s) + "'");
}

std::string_view to_string(EdgeModel model) {
  switch (model) {
    case EdgeModel::jk: return "jk";
    case EdgeModel::uniform: return "uniform";
    case EdgeModel::permutation: return "permutation";
  }
  return "jk";
}

EdgeModel edge_model_from_string(std::string_view s) {
  for (auto m : {EdgeModel::jk, EdgeModel::uniform, EdgeModel::permutation})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown first-cycle model '" + std::string(s) + "'");
}

ExperimentResult first_cycle_edge_model(std::size_t d, EdgeModel model, const ExperimentOptions& opts) {
  check_trials(opts);
  if (model == EdgeModel::jk) throw std::invalid_argument("the jk model is run by first_cycle_time_jk");
  auto r = start(model == EdgeModel::uniform ? "first_cycle_uniform" : "first_cycle_permutation", opts,
                 {{"d", double(d)}});
  absorb(r, run_trials<Measurement>(opts.trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(opts.seed, t);
    const std::size_t edges =
        model == EdgeModel::uniform ? first_cycle_uniform_model(d, rng) : first_cycle_permutation_model(d, rng);
    return Measurement{static_cast<double>(edges) / static_cast<double>(d), false};
  }));
  return r;
}

ExperimentResult first_cycle_time_jk(std::size_t d, double p, CycleKind kind, const ExperimentOptions& opts,
                                     const AdaptiveOptions& adaptive) {
  check_trials(opts);
  const auto params = ModelParams::make(d, p);
  auto r = start("first_cycle_jk", opts,
                 {{"d", double(d)}, {"p", p}, {"theta", params.theta()}, {"max_steps", double(opts.max_steps)},
                  {"undirected", kind == CycleKind::undirected ? 1.0 : 0.0}});
  AdaptiveOptions aopts = adaptive;
  aopts.keep_records = false;
  const StopRule stop = kind == CycleKind::directed ? StopRule::first_cycle : StopRule::first_undirected_cycle;
  absorb(r, run_trials<Measurement>(opts.trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(opts.seed, t);
    const auto trace = run_adaptive(params, rng, opts.max_steps, stop, aopts);
    const auto event = kind == CycleKind::directed ? trace.first_cycle_step : trace.first_undirected_cycle_step;
    return adaptive_measurement(trace, event, opts.max_steps);
  }));
  return r;
}

double oracle_cycle_prob_one_step(double dp) {
  if (!(dp > 0.0)) throw std::invalid_argument("dp must be positive");
  return -std::expm1(-dp) - dp * std::exp(-dp);
}

double oracle_attach_prob(std::size_t k, double p) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  if (p == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(k) * std::log1p(-p));
}

double oracle_mean_waiting(std::size_t k, double p) {
  const double r = oracle_attach_prob(k, p);
  if (r == 0.0) throw std::domain_error("attachment probability is zero");
  return 1.0 / r;
}

TotalGrowth oracle_total_growth(std::size_t d, double p) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  TotalGrowth g;
  for (std::size_t k = 1; k <= d; ++k) g.exact_sum += oracle_mean_waiting(k, p);
  const double log_q = std::log1p(-p);
  const double dd = static_cast<double>(d);
  // log(1 - (1-p)^x) = log(-expm1(x log q))
  auto log_one_minus_qx = [&](double x) { return std::log(-std::expm1(x * log_q)); };
  g.integral_approx = dd - 1.0 - (log_one_minus_qx(dd) - log_one_minus_qx(1.0)) / log_q;
  g.relative_gap = std::abs(g.exact_sum - g.integral_approx) / g.exact_sum;
  g.printed_closed_form = dd - 1.0 + std::expm1(dd * log_q) / log_q + p / log_q;
  return g;
}

ExperimentResult waiting_time(std::size_t k, double p, const ExperimentOptions& opts) {
  check_trials(opts);
  auto r = start("waiting_time", opts, {{"k", double(k)}, {"p", p}, {"max_steps", double(opts.max_steps)}});
  r.oracle_value = oracle_mean_waiting(k, p);
  absorb(r, run_trials<Measurement>(opts.trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(opts.seed, t);
    for (std::size_t step = 1; step <= opts.max_steps; ++step) {
      bool attached = false;
      for (std::size_t i = 0; i < k; ++i) attached = bernoulli(rng, p) || attached;
      if (attached) return Measurement{static_cast<double>(step), false};
    }
    return Measurement{static_cast<double>(opts.max_steps), true};
  }));
  return r;
}

ExperimentResult acs_growth_time_jk(std::size_t d, double p, const ExperimentOptions& opts, std::size_t planted_cycle,
                                    const AdaptiveOptions& adaptive) {
  check_trials(opts);
  const auto params = ModelParams::make(d, p);
  auto r = start("acs_growth", opts,
                 {{"d", double(d)},
                  {"p", p},
                  {"theta", params.theta()},
                  {"max_steps", double(opts.max_steps)},
                  {"planted_cycle", double(planted_cycle)}});
  if (p > 0.0 && p < 1.0) r.oracle_value = oracle_total_growth(d, p).exact_sum;
  AdaptiveOptions aopts = adaptive;
  aopts.keep_records = false;
  aopts.planted_cycle = planted_cycle;
  absorb(r, run_trials<Measurement>(opts.trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(opts.seed, t);
    const auto trace = run_adaptive(params, rng, opts.max_steps, StopRule::full_acs, aopts);
    return adaptive_measurement(trace, trace.full_acs_step, opts.max_steps);
  }));
  return r;
}

ScalingFit scaling_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("xs and ys differ in length");
  if (xs.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("scaling fit needs positive values");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("xs must be strictly increasing");
  }
  ScalingFit fit{xs, ys};
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]) / n;
    my += std::log(ys[i]) / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx, dy = std::log(ys[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

ConjectureScan conjecture_scan(double theta, const std::vector<std::size_t>& d_grid, const ExperimentOptions& opts,
                               const AdaptiveOptions& adaptive) {
  if (d_grid.empty()) throw std::invalid_argument("d grid is empty");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  ConjectureScan scan;
  scan.theta = theta;
  std::vector<double> xs, fc, acs;
  for (std::size_t g = 0; g < d_grid.size(); ++g) {
    const std::size_t d = d_grid[g];
    ScanRow row;
    row.d = d;
    row.theta = theta;
    row.p = theta / static_cast<double>(d);
    ExperimentOptions sub = opts;
    sub.seed = derive_seed(opts.seed, 2 * g);
    row.first_cycle = first_cycle_time_jk(d, row.p, CycleKind::directed, sub, adaptive);
    sub.seed = derive_seed(opts.seed, 2 * g + 1);
    row.full_acs = acs_growth_time_jk(d, row.p, sub, 2, adaptive);
    if (row.p < 1.0) row.growth_oracle = oracle_total_growth(d, row.p);
    xs.push_back(static_cast<double>(d));
    fc.push_back(row.first_cycle.mean);
    acs.push_back(row.full_acs.mean);
    scan.rows.push_back(std::move(row));
  }
  scan.first_cycle_increasing = true;
  for (std::size_t g = 1; g < fc.size(); ++g)
    if (!(fc[g] > fc[g - 1])) scan.first_cycle_increasing = false;
  auto positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double y) { return y > 0.0; });
  };
  const bool increasing = std::is_sorted(xs.begin(), xs.end()) &&
                          std::adjacent_find(xs.begin(), xs.end()) == xs.end();
  if (xs.size() >= 3 && increasing) {
    if (positive(fc)) scan.first_cycle_fit = scaling_fit(xs, fc);
    if (positive(acs)) scan.full_acs_fit = scaling_fit(xs, acs);
  }
  return scan;
}

}  // namespace jknet
