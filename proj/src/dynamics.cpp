#include "jknet/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jknet/error.hpp"

namespace jknet {

ConcentrationVector ConcentrationVector::uniform(std::size_t d) {
  if (d == 0) throw std::invalid_argument("empty concentration vector");
  return ConcentrationVector(Vec::Constant(static_cast<Eigen::Index>(d), 1.0 / static_cast<double>(d)));
}

ConcentrationVector ConcentrationVector::from(Vec x) {
  if (x.size() == 0) throw std::invalid_argument("empty concentration vector");
  if (!x.allFinite()) throw std::invalid_argument("concentration vector has non-finite entries");
  if (x.minCoeff() < -1e-12) throw std::invalid_argument("concentration vector has negative entries");
  if (std::abs(x.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("concentration vector sums to " + std::to_string(x.sum()));
  }
  x = x.cwiseMax(0.0);
  return ConcentrationVector(std::move(x));
}

Eigen::MatrixXd to_dense(const InteractionMatrix& c) {
  const auto d = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd m(d, d);
  const auto data = c.data();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = data[static_cast<std::size_t>(i * d + j)];
  return m;
}

Vec vector_field(const InteractionMatrix& c, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != c.size()) {
    throw std::invalid_argument("vector of length " + std::to_string(x.size()) +
                                " does not match d = " + std::to_string(c.size()));
  }
  const std::size_t d = c.size();
  const auto data = c.data();
  Vec cx(x.size());
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (data[i * d + j]) s += x(static_cast<Eigen::Index>(j));
    cx(static_cast<Eigen::Index>(i)) = s;
  }
  return cx - cx.sum() * x;
}

namespace {

double residual_of(const Eigen::MatrixXd& dense, const Vec& x) {
  const Vec cx = dense * x;
  return (cx - cx.sum() * x).lpNorm<1>();
}

// Fixed-step schedule: ceil(t_end / h) steps, the last one clipped to t_end.
std::size_t fixed_step_count(double t_end, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (t_end <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
}

void check_horizon(double t_end) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be finite and >= 0");
}

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const Eigen::MatrixXd& dense, std::size_t stride)
      : dense_(dense), stride_(std::max<std::size_t>(stride, 1)) {}

  void record(double t, const Vec& x) {
    traj_.times.push_back(t);
    traj_.states.push_back(x);
    traj_.residuals.push_back(residual_of(dense_, x));
  }

  // Renormalizes a raw step result in place and logs drift and undershoot.
  void accept(Vec& x, double h) {
    const double mass = x.sum();
    traj_.max_drift_rate = std::max(traj_.max_drift_rate, std::abs(mass - 1.0) / h);
    traj_.min_component = std::min(traj_.min_component, x.minCoeff());
    x = x.cwiseMax(0.0);
    x /= x.sum();
    ++traj_.steps;
  }

  bool due(bool last) const { return last || traj_.steps % stride_ == 0; }

  Trajectory finish() { return std::move(traj_); }

 private:
  const Eigen::MatrixXd& dense_;
  std::size_t stride_;
  Trajectory traj_;
};

}  // namespace

Trajectory integrate(const InteractionMatrix& c, const ConcentrationVector& x0, double t_end,
                     const StepOptions& opts) {
  if (x0.size() != c.size()) throw std::invalid_argument("x0 length does not match d");
  check_horizon(t_end);
  const Eigen::MatrixXd dense = to_dense(c);
  const VectorField f = [&dense](const Vec& x) -> Vec {
    const Vec cx = dense * x;
    return cx - cx.sum() * x;
  };
  TrajectoryBuilder out(dense, opts.record_stride);
  Vec x = x0.values();
  out.record(0.0, x);

  if (!opts.adaptive) {
    const std::size_t n = fixed_step_count(t_end, opts.h);
    for (std::size_t k = 1; k <= n; ++k) {
      const double t_prev = static_cast<double>(k - 1) * opts.h;
      const double t = k == n ? t_end : static_cast<double>(k) * opts.h;
      const double h = t - t_prev;
      x = rk4_step(f, x, h);
      out.accept(x, h);
      if (out.due(k == n)) out.record(t, x);
    }
    return out.finish();
  }

  double t = 0.0;
  double h = std::min(opts.h, opts.max_step);
  while (t < t_end) {
    const bool last = t + h >= t_end;
    const double step = last ? t_end - t : h;
    const EmbeddedStep trial = dopri_step(f, x, step);
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double scale = opts.tol + opts.tol * std::max(std::abs(x(i)), std::abs(trial.x(i)));
      err = std::max(err, std::abs(trial.error(i)) / scale);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (err <= 1.0) {
      x = trial.x;
      t = last ? t_end : t + step;
      out.accept(x, step);
      if (out.due(last)) out.record(t, x);
    }
    h = std::min(step * factor, opts.max_step);
    if (h < opts.min_step) {
      throw IntegrationError("step size underflow at t = " + std::to_string(t));
    }
  }
  return out.finish();
}

Trajectory integrate_projective(const InteractionMatrix& c, const Vec& y0, double phi,
                                double t_end, const StepOptions& opts) {
  if (static_cast<std::size_t>(y0.size()) != c.size()) throw std::invalid_argument("y0 length does not match d");
  if (y0.minCoeff() < 0.0 || !(y0.sum() > 0.0)) {
    throw std::invalid_argument("y0 must be non-negative and nonzero");
  }
  check_horizon(t_end);
  const Eigen::MatrixXd dense = to_dense(c);
  const VectorField g = [&dense, phi](const Vec& y) -> Vec { return dense * y - phi * y; };
  TrajectoryBuilder out(dense, opts.record_stride);
  Vec y = y0 / y0.sum();
  out.record(0.0, y);
  const std::size_t n = fixed_step_count(t_end, opts.h);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t_prev = static_cast<double>(k - 1) * opts.h;
    const double t = k == n ? t_end : static_cast<double>(k) * opts.h;
    y = rk4_step(g, y, t - t_prev);
    const double mass = y.sum();
    if (!(mass > std::numeric_limits<double>::min())) {
      throw IntegrationError("projective state collapsed to zero at t = " + std::to_string(t));
    }
    y /= mass;
    y = y.cwiseMax(0.0);
    y /= y.sum();
    if (out.due(k == n)) out.record(t, y);
  }
  return out.finish();
}

std::string_view to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::acs_supported: return "acs_supported";
    case EquilibriumKind::terminal_supported: return "terminal_supported";
    case EquilibriumKind::degenerate_no_edges: return "degenerate_no_edges";
  }
  return "unknown";
}

EquilibriumKind equilibrium_kind_from_string(std::string_view s) {
  if (s == "acs_supported") return EquilibriumKind::acs_supported;
  if (s == "terminal_supported") return EquilibriumKind::terminal_supported;
  if (s == "degenerate_no_edges") return EquilibriumKind::degenerate_no_edges;
  throw std::invalid_argument("unknown equilibrium kind '" + std::string(s) + "'");
}

namespace {

VertexSet argmax_path_terminals(const InteractionMatrix& c) {
  const auto counts = path_counts(c);
  const VertexSet terminals = terminal_vertices(c);
  std::size_t best = 0;
  for (Vertex j : terminals) best = std::max(best, counts[j]);
  VertexSet out;
  for (Vertex j : terminals)
    if (counts[j] == best) out.push_back(j);
  return out;
}

Vec unit(std::size_t d, Vertex j) {
  Vec e = Vec::Zero(static_cast<Eigen::Index>(d));
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return e;
}

// Acyclic flow limit. With C nilpotent, e^{Ct} x0 is a polynomial in t whose
// top-degree coefficient is C^L x0 for the largest L with C^L x0 != 0.
Vec acyclic_flow_limit(const InteractionMatrix& c, const Vec& x0) {
  const std::size_t d = c.size();
  const std::vector<Edge> edges = c.edges();
  Vec y = x0, next(static_cast<Eigen::Index>(d));
  for (std::size_t n = 0; n <= d; ++n) {
    next.setZero();
    for (const auto& [src, dst] : edges) next(static_cast<Eigen::Index>(dst)) += y(static_cast<Eigen::Index>(src));
    const double mass = next.sum();
    if (mass == 0.0) break;
    y = next / mass;
  }
  return y;
}

// Cyclic flow limit: the direction of e^{Ct} x0 as t -> infinity. On the
// generalized eigenspace of rho, e^{Ct} = e^{rho t} sum_j t^j/j! N^j with
// N = C - rho I nilpotent of index m (the longest chain of dominant classes),
// so N^{m-1} e^{Ct} x0 points along the limit for every t once the other
// modes have decayed. The horizon is doubled by squaring e^{C} until that
// direction is stationary and stops moving. If x0 has no component at
// depth m-1 the next shallower depth is tried.
Vec cyclic_flow_limit(const InteractionMatrix& c, const Vec& x0, double rho, std::size_t chain,
                      const EquilibriumOptions& opts) {
  const std::size_t d = c.size();
  VertexSet core;     // R: vertices downstream of some cycle
  VertexSet upstream; // Q: the rest, an acyclic, predecessor-closed region
  Vec z;
  if (opts.fold_upstream && x0.minCoeff() > 0.0) {
    VertexSet cyclic;
    for (const auto& s : strongly_connected_components(c))
      if (s.size() > 1) cyclic.insert(cyclic.end(), s.begin(), s.end());
    const auto reach = reachable_from(c, cyclic);
    for (Vertex v = 0; v < d; ++v) (reach[v] ? core : upstream).push_back(v);
  } else {
    for (Vertex v = 0; v < d; ++v) core.push_back(v);
  }

  const auto nr = static_cast<Eigen::Index>(core.size());
  const auto nq = static_cast<Eigen::Index>(upstream.size());
  Eigen::MatrixXd a(nr, nr);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index q = 0; q < nr; ++q) a(r, q) = c.at(core[r], core[q]);
  z.resize(nr);
  for (Eigen::Index r = 0; r < nr; ++r) z(r) = x0(static_cast<Eigen::Index>(core[r]));

  if (nq > 0) {
    // The upstream region feeds R with polynomially growing input whose
    // contribution to the leading modes is B (rho I - C_QQ)^{-1} x0_Q; the
    // Neumann series terminates because C_QQ is nilpotent.
    Eigen::MatrixXd cqq(nq, nq), crq(nr, nq);
    for (Eigen::Index r = 0; r < nq; ++r)
      for (Eigen::Index q = 0; q < nq; ++q) cqq(r, q) = c.at(upstream[r], upstream[q]);
    for (Eigen::Index r = 0; r < nr; ++r)
      for (Eigen::Index q = 0; q < nq; ++q) crq(r, q) = c.at(core[r], upstream[q]);
    Vec term(nq);
    for (Eigen::Index q = 0; q < nq; ++q) term(q) = x0(static_cast<Eigen::Index>(upstream[q])) / rho;
    Vec folded = term;
    for (Eigen::Index n = 0; n < nq && term.sum() > 0.0; ++n) {
      term = cqq * term / rho;
      folded += term;
    }
    z += crq * folded;
  }

  const Eigen::MatrixXd dense = to_dense(c);
  const Eigen::MatrixXd step = a.exp();
  for (std::size_t depth = chain; depth-- > 0;) {
    Eigen::MatrixXd m = step;
    std::optional<Vec> previous;
    for (std::size_t k = 0; k <= opts.max_doublings; ++k) {
      Vec y = m * z;
      const double scale = y.sum();
      if (!std::isfinite(scale) || !(scale > 0.0)) break;
      y /= scale;
      for (std::size_t j = 0; j < depth; ++j) y = a * y - rho * y;
      const double mass = y.sum();
      if (mass > 1e-12) {
        Vec x = Vec::Zero(static_cast<Eigen::Index>(d));
        for (Eigen::Index r = 0; r < nr; ++r)
          x(static_cast<Eigen::Index>(core[r])) = std::max(0.0, y(r)) / mass;
        x /= x.sum();
        const double residual = residual_of(dense, x);
        const double change =
            previous ? (x - *previous).lpNorm<1>() : std::numeric_limits<double>::infinity();
        if (residual < opts.tol && change < opts.tol) return x;
        previous = x;
      }
      m = m * m;
      const double top = m.maxCoeff();
      if (!std::isfinite(top) || !(top > 0.0)) break;
      m /= top;
    }
  }
  throw NonConvergenceError("flow limit did not settle within " + std::to_string(opts.max_doublings) +
                            " horizon doublings");
}

void fill_support(EquilibriumResult& out, double zero_tol) {
  out.support.clear();
  out.zero_set.clear();
  for (Eigen::Index j = 0; j < out.x_star.size(); ++j)
    (out.x_star(j) > zero_tol ? out.support : out.zero_set).push_back(static_cast<Vertex>(j));
}

}  // namespace

EquilibriumResult equilibrium(const InteractionMatrix& c, const EquilibriumOptions& opts) {
  const std::size_t d = c.size();
  const Vec x0 = opts.x0 ? ConcentrationVector::from(*opts.x0).values()
                         : ConcentrationVector::uniform(d).values();
  if (static_cast<std::size_t>(x0.size()) != d) throw std::invalid_argument("x0 length does not match d");
  const Eigen::MatrixXd dense = to_dense(c);

  EquilibriumResult out;
  if (c.empty()) {
    out.kind = EquilibriumKind::degenerate_no_edges;
    out.x_star = x0;
    out.non_unique = true;
  } else if (opts.mode == EquilibriumMode::analytic) {
    const EquilibriumSetBasis basis = equilibrium_set_basis(c, opts.tol);
    out.kind = basis.kind;
    out.x_star = Vec::Zero(static_cast<Eigen::Index>(d));
    for (const Vec& v : basis.basis) out.x_star += v;
    out.x_star /= static_cast<double>(basis.basis.size());
    out.non_unique = basis.basis.size() > 1;
    out.lambda = spectral_radius_pf(c, opts.spectral).lambda;
  } else {
    SpectralOptions sopts = opts.spectral;
    sopts.tol = std::min(sopts.tol, 0.1 * opts.tol);
    const SpectralData spectral = spectral_radius_pf(c, sopts);
    out.lambda = spectral.lambda;
    if (spectral.pf_basis.empty()) {
      out.kind = EquilibriumKind::terminal_supported;
      out.x_star = acyclic_flow_limit(c, x0);
      out.non_unique = argmax_path_terminals(c).size() > 1;
    } else {
      out.kind = EquilibriumKind::acs_supported;
      out.non_unique = spectral.multiplicity > 1;
      if (spectral.multiplicity == 1 && spectral.dominant_chain == 1 && x0.minCoeff() > 0.0) {
        // A single dominant class without Jordan chains: a positive x0 has a
        // positive component along its left eigenvector, so the flow ends on
        // the PF vector itself.
        const auto& v = spectral.pf_basis.front();
        out.x_star = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(d));
      } else {
        out.x_star = cyclic_flow_limit(c, x0, spectral.lambda, spectral.dominant_chain, opts);
      }
    }
  }
  out.residual = residual_of(dense, out.x_star);
  if (!(out.residual <= opts.tol)) {
    throw NonConvergenceError("equilibrium residual " + std::to_string(out.residual) +
                              " exceeds tolerance");
  }
  fill_support(out, opts.zero_tol);
  return out;
}

EquilibriumSetBasis equilibrium_set_basis(const InteractionMatrix& c, double tol) {
  const std::size_t d = c.size();
  EquilibriumSetBasis out;
  if (c.empty()) {
    out.kind = EquilibriumKind::degenerate_no_edges;
    for (Vertex j = 0; j < d; ++j) out.basis.push_back(unit(d, j));
    return out;
  }
  if (!has_directed_cycle(c)) {
    out.kind = EquilibriumKind::terminal_supported;
    for (Vertex j : argmax_path_terminals(c)) out.basis.push_back(unit(d, j));
  } else {
    out.kind = EquilibriumKind::acs_supported;
    SpectralOptions sopts;
    sopts.tol = 0.1 * tol;
    for (auto& v : spectral_radius_pf(c, sopts).pf_basis)
      out.basis.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const Eigen::MatrixXd dense = to_dense(c);
  Vec barycentre = Vec::Zero(static_cast<Eigen::Index>(d));
  for (const Vec& v : out.basis) {
    if (residual_of(dense, v) > tol) throw NonConvergenceError("basis vector is not stationary to tolerance");
    barycentre += v / static_cast<double>(out.basis.size());
  }
  if (residual_of(dense, barycentre) > tol) {
    throw NonConvergenceError("convex combination of basis vectors is not stationary to tolerance");
  }
  return out;
}

AndiVariables andi_sequences(const InteractionMatrix& c, const Vec& x, std::size_t depth) {
  if (depth < 1) throw std::invalid_argument("ANDI depth must be >= 1");
  if (static_cast<std::size_t>(x.size()) != c.size()) throw std::invalid_argument("x length does not match d");
  const Eigen::MatrixXd dense = to_dense(c);
  AndiVariables out;
  out.depth = depth;
  Vec power = x;
  for (std::size_t n = 1; n <= depth; ++n) {
    power = dense * power;
    if (!power.allFinite()) throw std::overflow_error("ANDI sequence overflowed at n = " + std::to_string(n));
    out.R.push_back(power);
    out.r.push_back(power.sum());
  }
  return out;
}

double andi_residual(const InteractionMatrix& c, const Trajectory& traj, std::size_t n, double h) {
  if (n < 1) throw std::invalid_argument("ANDI index must be >= 1");
  if (traj.states.size() < 3) throw std::invalid_argument("ANDI residual needs at least 3 samples");
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    if (std::abs(traj.times[k] - traj.times[k - 1] - h) > 1e-9 * std::max(1.0, h) + 1e-12) {
      throw std::invalid_argument("trajectory is not sampled at uniform spacing h");
    }
  }
  const std::size_t depth = n + 1;
  std::vector<AndiVariables> vars;
  vars.reserve(traj.states.size());
  for (const Vec& x : traj.states) vars.push_back(andi_sequences(c, x, depth));
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < vars.size(); ++k) {
    const double derivative = (vars[k + 1].r[n - 1] - vars[k - 1].r[n - 1]) / (2.0 * h);
    const double rhs = vars[k].r[n] - vars[k].r[n - 1] * vars[k].r[0];
    worst = std::max(worst, std::abs(derivative - rhs));
  }
  return worst;
}

}  // namespace jknet
