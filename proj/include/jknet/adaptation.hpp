#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "jknet/dynamics.hpp"
#include "jknet/graph.hpp"
#include "jknet/rng.hpp"

namespace jknet {

// Initial condition for each epoch's equilibrium solve.
enum class X0Mode {
  uniform,  // start every epoch from the barycentre
  carry,    // previous x_* with the resampled vertex reset to 1/d
};

enum class StopRule { none, first_cycle, first_undirected_cycle, full_acs };

std::string_view to_string(X0Mode mode);
X0Mode x0_mode_from_string(std::string_view s);
std::string_view to_string(StopRule rule);
StopRule stop_rule_from_string(std::string_view s);

struct AdaptiveOptions {
  double rel_tol = 1e-9;   // tie tolerance for the minimum-prevalence set
  double zero_tol = 1e-9;  // (x_*)_j <= zero_tol counts as extinct
  X0Mode x0_mode = X0Mode::uniform;
  EquilibriumOptions equilibrium;
  // Length of a directed cycle planted on vertices 0..k-1 of C[0]; 0 plants nothing.
  std::size_t planted_cycle = 0;
  bool keep_records = true;
};

struct AdaptiveState {
  std::size_t s = 0;
  InteractionMatrix c;
  EquilibriumResult x_star;
};

struct StepRecord {
  std::size_t s = 0;
  VertexSet j_min_set;
  std::optional<Vertex> chosen;  // empty on the last record of a trace
  double lambda = 0.0;
  std::size_t support_size = 0;
  bool directed_cycle = false;
  bool full_acs = false;
  bool undirected_cycle = false;

  bool operator==(const StepRecord&) const = default;
};

struct AdaptiveTrace {
  ModelParams params;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;
  StopRule stop = StopRule::none;
  AdaptiveOptions options;
  std::vector<StepRecord> records;
  std::optional<std::size_t> first_cycle_step;
  std::optional<std::size_t> first_undirected_cycle_step;
  std::optional<std::size_t> full_acs_step;
  std::size_t steps = 0;  // number of updates performed
  // Steps where the extinct set was nonempty in a cyclic graph and the
  // update nevertheless hit the support, altered it, or removed all cycles.
  std::size_t preservation_violations = 0;
  // Steps where the extinct set was nonempty but differed from the minimum set.
  std::size_t min_set_mismatches = 0;

  // True when the stop rule asked for an event that never occurred.
  bool censored() const;
};

// {j : x_j <= min_k x_k + rel_tol * max(1, min_k x_k)}.
VertexSet min_prevalence_set(const Vec& x_star, double rel_tol = 1e-9);

AdaptiveState initial_state(InteractionMatrix c, const AdaptiveOptions& opts = {});

struct StepOutcome {
  AdaptiveState next;
  StepRecord record;  // describes the state the step started from
  bool preservation_ok = true;
  bool min_set_ok = true;
};

// One Jain-Krishna update: pick j_* uniformly from the minimum set, redraw
// its row and column with probability p, and re-solve for the equilibrium.
StepOutcome jk_step(const AdaptiveState& state, double p, Rng& rng, const AdaptiveOptions& opts = {});

StepRecord describe(const AdaptiveState& state, const AdaptiveOptions& opts = {});

// Samples C[0] from ER_d(p) on stream (seed, 0) and iterates jk_step until
// the stop rule fires or max_steps updates have been made.
AdaptiveTrace run_adaptive(const ModelParams& params, std::uint64_t seed, std::size_t max_steps,
                           StopRule stop, const AdaptiveOptions& opts = {});

// Same, drawing everything from the given stream.
AdaptiveTrace run_adaptive(const ModelParams& params, Rng& rng, std::size_t max_steps, StopRule stop,
                           const AdaptiveOptions& opts = {});

}  // namespace jknet
