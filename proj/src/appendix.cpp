#include "jknet/appendix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "jknet/experiments.hpp"

namespace jknet {

SignedMatrix::SignedMatrix(std::size_t d)
    : values_(Eigen::MatrixXd::Zero(idx(d), idx(d))),
      mask_(Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic>::Zero(idx(d), idx(d))) {
  if (d < 1) throw std::invalid_argument("signed matrix needs d >= 1");
}

void SignedMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= size() || j >= size()) throw std::out_of_range("signed matrix index out of range");
  const double lo = -1.0, hi = i == j ? 0.0 : 1.0;
  if (!(value >= lo && value <= hi))
    throw std::invalid_argument("entry (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
  values_(idx(i), idx(j)) = value;
  mask_(idx(i), idx(j)) = 1;
}

void SignedMatrix::clear(std::size_t i, std::size_t j) {
  if (i >= size() || j >= size()) throw std::out_of_range("signed matrix index out of range");
  values_(idx(i), idx(j)) = 0.0;
  mask_(idx(i), idx(j)) = 0;
}

SignedMatrix sample_signed(std::size_t d, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  SignedMatrix c(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const bool on = bernoulli(rng, p);
      const double u = uniform01(rng);  // drawn either way, keeps streams aligned
      if (on) c.set(i, j, i == j ? -u : 2.0 * u - 1.0);
    }
  return c;
}

Vec signed_field(const SignedMatrix& c, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != c.size()) throw std::invalid_argument("x length does not match d");
  const Vec cx = c.values() * x;
  return cx - x * cx.sum();
}

Vec constrained_field(const SignedMatrix& c, const Vec& x) {
  Vec f = signed_field(c, x);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (std::abs(x(i)) <= boundary_tol && f(i) < 0.0) f(i) = 0.0;
  return f;
}

namespace {

// One RK4 step of the constrained system that stops early at the first
// component reaching 0. Returns the step actually taken.
double guarded_step(const SignedMatrix& c, Vec& x, double h, double contact_tol, std::vector<std::size_t>& hit) {
  const VectorField f = [&](const Vec& y) { return constrained_field(c, y); };
  hit.clear();
  auto lowest_live = [&](const Vec& y) {
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (x(i) > boundary_tol) lo = std::min(lo, y(i));
    return lo;
  };
  Vec y = rk4_step(f, x, h);
  if (lowest_live(y) >= -contact_tol) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (x(i) > boundary_tol && y(i) <= contact_tol) hit.push_back(static_cast<std::size_t>(i));
    for (std::size_t i : hit) y(static_cast<Eigen::Index>(i)) = 0.0;
    x = y;
    return h;
  }
  double lo = 0.0, hi = h;
  // Bisect down to the resolution of t rather than stopping at contact_tol,
  // so the mass removed by clamping is at round-off level.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    y = rk4_step(f, x, mid);
    (lowest_live(y) < 0.0 ? hi : lo) = mid;
  }
  y = rk4_step(f, x, lo);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (x(i) > boundary_tol && y(i) <= contact_tol) hit.push_back(static_cast<std::size_t>(i));
  for (std::size_t i : hit) y(static_cast<Eigen::Index>(i)) = 0.0;
  x = y;
  return lo;
}

}  // namespace

std::optional<Witness> follow_to_boundary(const SignedMatrix& c, const Vec& x0, const WitnessOptions& opts,
                                          TrialSummary* summary) {
  if (static_cast<std::size_t>(x0.size()) != c.size()) throw std::invalid_argument("x0 length does not match d");
  if (!(opts.h > 0.0) || !(opts.sample_every > 0.0)) throw std::invalid_argument("step sizes must be positive");
  Vec x = x0;
  double t = 0.0;
  std::vector<std::size_t> hit;
  std::optional<Witness> witness;
  while (t < opts.t_max && !witness) {
    t += guarded_step(c, x, std::min(opts.h, opts.t_max - t), opts.contact_tol, hit);
    if (hit.empty()) continue;
    if (summary) summary->contact = true;
    const Vec f = signed_field(c, x);
    for (std::size_t r : hit) {
      if (!(f(static_cast<Eigen::Index>(r)) < 0.0)) continue;
      Witness w;
      w.c = c;
      w.t_contact = t;
      w.vertex = r;
      w.x_at_contact = x;
      w.f_at_contact = f(static_cast<Eigen::Index>(r));
      w.mass_derivative = constrained_field(c, x).sum();
      const Vec cx = c.values() * x;
      w.proof_expression = (cx.sum() - cx(static_cast<Eigen::Index>(r))) - cx.sum();
      witness = std::move(w);
      break;
    }
  }
  if (!witness) return std::nullopt;

  Witness& w = *witness;
  const double t_end = w.t_contact + opts.t_after;
  double next_sample = w.t_contact;
  while (true) {
    if (t >= next_sample - 1e-12) {
      const double drift = std::abs(x.sum() - 1.0);
      w.drift_series.emplace_back(t, drift);
      w.max_drift = std::max(w.max_drift, drift);
      next_sample += opts.sample_every;
    }
    if (t >= t_end - 1e-12) break;
    const double h = std::min({opts.h, next_sample - t, t_end - t});
    t += guarded_step(c, x, h, opts.contact_tol, hit);
    if (!x.allFinite()) break;
  }
  if (summary) {
    summary->witness = true;
    summary->t_contact = w.t_contact;
    summary->mass_derivative = w.mass_derivative;
    summary->max_drift = w.max_drift;
  }
  return witness;
}

WitnessReport demonstrate_inconsistency(std::size_t d, double p, std::size_t trials, std::uint64_t seed,
                                        const WitnessOptions& opts) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  WitnessReport report;
  report.d = d;
  report.p = p;
  report.trials = trials;
  report.seed = seed;
  struct Outcome {
    TrialSummary summary;
    std::optional<Witness> witness;
  };
  auto outcomes = run_trials<Outcome>(trials, opts.jobs, [&](std::size_t t) {
    Rng rng = make_stream(seed, t);
    const SignedMatrix c = sample_signed(d, p, rng);
    Vec x0(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) = -std::log1p(-uniform01(rng));
    x0 /= x0.sum();
    Outcome out;
    out.summary.trial = t;
    out.witness = follow_to_boundary(c, x0, opts, &out.summary);
    if (out.witness) out.witness->trial = t;
    return out;
  });
  for (auto& o : outcomes) {
    if (o.summary.witness) {
      ++report.witnesses;
      if (!report.first) report.first = std::move(o.witness);
    }
    report.summaries.push_back(o.summary);
  }
  return report;
}

}  // namespace jknet
