#include "jknet/adaptation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "jknet/error.hpp"

namespace jknet {

std::string_view to_string(X0Mode mode) {
  return mode == X0Mode::uniform ? "uniform" : "carry";
}

X0Mode x0_mode_from_string(std::string_view s) {
  if (s == "uniform") return X0Mode::uniform;
  if (s == "carry") return X0Mode::carry;
  throw std::invalid_argument("unknown x0 mode '" + std::string(s) + "'");
}

std::string_view to_string(StopRule rule) {
  switch (rule) {
    case StopRule::none: return "none";
    case StopRule::first_cycle: return "first_cycle";
    case StopRule::first_undirected_cycle: return "first_undirected_cycle";
    case StopRule::full_acs: return "full_acs";
  }
  return "none";
}

StopRule stop_rule_from_string(std::string_view s) {
  for (auto r : {StopRule::none, StopRule::first_cycle, StopRule::first_undirected_cycle, StopRule::full_acs})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown stop rule '" + std::string(s) + "'");
}

bool AdaptiveTrace::censored() const {
  switch (stop) {
    case StopRule::none: return false;
    case StopRule::first_cycle: return !first_cycle_step;
    case StopRule::first_undirected_cycle: return !first_undirected_cycle_step;
    case StopRule::full_acs: return !full_acs_step;
  }
  return false;
}

VertexSet min_prevalence_set(const Vec& x_star, double rel_tol) {
  if (x_star.size() == 0) throw std::invalid_argument("empty concentration vector");
  const double lo = x_star.minCoeff();
  const double cutoff = lo + rel_tol * std::max(1.0, lo);
  VertexSet out;
  for (Eigen::Index j = 0; j < x_star.size(); ++j)
    if (x_star(j) <= cutoff) out.push_back(static_cast<Vertex>(j));
  return out;
}

namespace {

EquilibriumResult solve(const InteractionMatrix& c, std::optional<Vec> x0, const AdaptiveOptions& opts) {
  EquilibriumOptions eq = opts.equilibrium;
  eq.zero_tol = opts.zero_tol;
  eq.x0 = std::move(x0);
  return equilibrium(c, eq);
}

bool same_induced(const InteractionMatrix& a, const InteractionMatrix& b, const VertexSet& set) {
  for (Vertex i : set)
    for (Vertex j : set)
      if (a.at(i, j) != b.at(i, j)) return false;
  return true;
}

VertexSet all_vertices(std::size_t d) {
  VertexSet out(d);
  for (Vertex v = 0; v < d; ++v) out[v] = v;
  return out;
}

}  // namespace

AdaptiveState initial_state(InteractionMatrix c, const AdaptiveOptions& opts) {
  AdaptiveState state{0, std::move(c), {}};
  state.x_star = solve(state.c, std::nullopt, opts);
  return state;
}

StepRecord describe(const AdaptiveState& state, const AdaptiveOptions& opts) {
  StepRecord r;
  r.s = state.s;
  r.j_min_set = min_prevalence_set(state.x_star.x_star, opts.rel_tol);
  r.lambda = state.x_star.lambda;
  r.support_size = state.x_star.support.size();
  r.directed_cycle = state.x_star.lambda > 0.0;
  r.full_acs = r.directed_cycle && is_acs(state.c, all_vertices(state.c.size()));
  r.undirected_cycle = has_undirected_cycle(state.c);
  return r;
}

namespace {

StepOutcome advance(const AdaptiveState& state, StepRecord record, double p, Rng& rng,
                    const AdaptiveOptions& opts) {
  const std::size_t d = state.c.size();
  const Vertex chosen = record.j_min_set[uniform_index(rng, record.j_min_set.size())];
  record.chosen = chosen;

  InteractionMatrix next = resample_vertex(state.c, chosen, p, rng);
  std::optional<Vec> x0;
  if (opts.x0_mode == X0Mode::carry) {
    Vec carried = state.x_star.x_star;
    carried(static_cast<Eigen::Index>(chosen)) = 1.0 / static_cast<double>(d);
    x0 = carried / carried.sum();
  }
  EquilibriumResult x_star;
  try {
    x_star = solve(next, std::move(x0), opts);
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(std::string(e.what()) + " (adaptive step " + std::to_string(state.s + 1) +
                              ", resampled vertex " + std::to_string(chosen) + ")");
  }
  StepOutcome out{AdaptiveState{state.s + 1, std::move(next), std::move(x_star)}, std::move(record)};
  const VertexSet& jmin = out.record.j_min_set;

  const VertexSet& extinct = state.x_star.zero_set;
  if (!extinct.empty()) {
    out.min_set_ok = jmin == extinct;
    if (out.record.directed_cycle) {
      out.preservation_ok = std::binary_search(extinct.begin(), extinct.end(), chosen) &&
                            same_induced(state.c, out.next.c, state.x_star.support) &&
                            out.next.x_star.lambda > 0.0;
    }
  }
  return out;
}

}  // namespace

StepOutcome jk_step(const AdaptiveState& state, double p, Rng& rng, const AdaptiveOptions& opts) {
  return advance(state, describe(state, opts), p, rng, opts);
}

AdaptiveTrace run_adaptive(const ModelParams& params, std::uint64_t seed, std::size_t max_steps, StopRule stop,
                           const AdaptiveOptions& opts) {
  Rng rng = make_stream(seed, 0);
  AdaptiveTrace trace = run_adaptive(params, rng, max_steps, stop, opts);
  trace.seed = seed;
  return trace;
}

AdaptiveTrace run_adaptive(const ModelParams& params, Rng& rng, std::size_t max_steps, StopRule stop,
                           const AdaptiveOptions& opts) {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (opts.planted_cycle == 1 || opts.planted_cycle > params.d)
    throw std::invalid_argument("planted cycle length must be 0 or in [2, d]");

  AdaptiveTrace trace;
  trace.params = params;
  trace.max_steps = max_steps;
  trace.stop = stop;
  trace.options = opts;

  InteractionMatrix c0 = sample_er_digraph(params, rng);
  for (std::size_t k = 0; k < opts.planted_cycle; ++k) c0.add_edge(k, (k + 1) % opts.planted_cycle);
  AdaptiveState state = initial_state(std::move(c0), opts);

  auto note_events = [&](const StepRecord& r) {
    if (r.directed_cycle && !trace.first_cycle_step) trace.first_cycle_step = r.s;
    if (r.undirected_cycle && !trace.first_undirected_cycle_step) trace.first_undirected_cycle_step = r.s;
    if (r.full_acs && !trace.full_acs_step) trace.full_acs_step = r.s;
  };
  auto should_stop = [&] {
    switch (stop) {
      case StopRule::none: return false;
      case StopRule::first_cycle: return trace.first_cycle_step.has_value();
      case StopRule::first_undirected_cycle: return trace.first_undirected_cycle_step.has_value();
      case StopRule::full_acs: return trace.full_acs_step.has_value();
    }
    return false;
  };

  for (;;) {
    StepRecord probe = describe(state, opts);
    note_events(probe);
    if (should_stop() || trace.steps == max_steps) {
      if (opts.keep_records) trace.records.push_back(std::move(probe));
      break;
    }
    StepOutcome step = advance(state, std::move(probe), params.p, rng, opts);
    if (!step.preservation_ok) ++trace.preservation_violations;
    if (!step.min_set_ok) ++trace.min_set_mismatches;
    if (opts.keep_records) trace.records.push_back(std::move(step.record));
    state = std::move(step.next);
    ++trace.steps;
  }
  return trace;
}

}  // namespace jknet
