#pragma once

#include <Eigen/Core>

#include <optional>
#include <string_view>
#include <vector>

#include "jknet/graph.hpp"
#include "jknet/ode.hpp"

namespace jknet {

// Point on the probability simplex. Entries down to -1e-12 are clamped to 0;
// anything further out, or a sum off by more than 1e-9, is rejected.
class ConcentrationVector {
 public:
  static ConcentrationVector uniform(std::size_t d);
  static ConcentrationVector from(Vec x);

  const Vec& values() const noexcept { return x_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(x_.size()); }
  double operator[](std::size_t j) const { return x_(static_cast<Eigen::Index>(j)); }

 private:
  explicit ConcentrationVector(Vec x) : x_(std::move(x)) {}
  Vec x_;
};

Eigen::MatrixXd to_dense(const InteractionMatrix& c);

// f(x) = Cx - |Cx|_1 x.
Vec vector_field(const InteractionMatrix& c, const Vec& x);

struct StepOptions {
  double h = 0.01;
  bool adaptive = false;
  double tol = 1e-9;        // adaptive error tolerance (absolute and relative)
  double min_step = 1e-14;  // adaptive underflow threshold
  double max_step = 1.0;
  std::size_t record_stride = 1;  // emit every n-th accepted step (the last is always kept)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> residuals;  // |f(x)|_1 at each emitted state
  // Largest |sum(x) - 1| / step before renormalization, over all steps.
  double max_drift_rate = 0.0;
  // Smallest component seen before clamping, over all steps.
  double min_component = 0.0;
  std::size_t steps = 0;
};

// Explicit RK4 (fixed step) or Dormand-Prince (adaptive) with every state
// renormalized to the simplex.
Trajectory integrate(const InteractionMatrix& c, const ConcentrationVector& x0, double t_end,
                     const StepOptions& opts = {});

// y' = Cy - phi y on the non-negative cone with RK4 and per-step 1-norm
// renormalization; the emitted states are the projections y / |y|_1.
Trajectory integrate_projective(const InteractionMatrix& c, const Vec& y0, double phi,
                                double t_end, const StepOptions& opts = {});

enum class EquilibriumKind { acs_supported, terminal_supported, degenerate_no_edges };

std::string_view to_string(EquilibriumKind kind);
EquilibriumKind equilibrium_kind_from_string(std::string_view s);

enum class EquilibriumMode {
  flow,      // limit of the flow from x0 (uniform by default)
  analytic,  // equal-weight combination of the attracting-set basis
};

struct EquilibriumOptions {
  std::optional<Vec> x0;
  EquilibriumMode mode = EquilibriumMode::flow;
  double tol = 1e-10;       // residual and stagnation tolerance
  double zero_tol = 1e-9;   // support detection
  std::size_t max_doublings = 80;
  // Fold the acyclic region upstream of all cycles into the initial
  // condition before the dense solve. Exact for strictly positive x0.
  bool fold_upstream = true;
  SpectralOptions spectral;
};

struct EquilibriumResult {
  Vec x_star;
  double residual = 0.0;
  VertexSet support;
  VertexSet zero_set;
  EquilibriumKind kind = EquilibriumKind::degenerate_no_edges;
  bool non_unique = false;
  double lambda = 0.0;  // spectral radius of C
};

EquilibriumResult equilibrium(const InteractionMatrix& c, const EquilibriumOptions& opts = {});

struct EquilibriumSetBasis {
  EquilibriumKind kind;
  std::vector<Vec> basis;
};

// Acyclic: e_j for terminals with maximal p(j). Cyclic: the non-negative
// extremal Perron-Frobenius eigenvectors. Every convex combination is checked
// to be stationary to `tol` (vertices and barycentre).
EquilibriumSetBasis equilibrium_set_basis(const InteractionMatrix& c, double tol = 1e-10);

struct AndiVariables {
  std::vector<double> r;  // r_1..r_N
  std::vector<Vec> R;     // R_1..R_N
  std::size_t depth = 0;
};

// R_n = C^n x, r_n = sum_j (R_n)_j for n = 1..depth.
AndiVariables andi_sequences(const InteractionMatrix& c, const Vec& x, std::size_t depth);

// max_k |dr_n/dt - (r_{n+1} - r_n r_1)| over interior samples, with dr_n/dt
// from central differences on a trajectory sampled every h.
double andi_residual(const InteractionMatrix& c, const Trajectory& traj, std::size_t n, double h);

}  // namespace jknet
