#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "jknet/ode.hpp"
#include "jknet/rng.hpp"

namespace jknet {

// Real-valued interaction matrix of the signed variant: each entry present
// with probability p, off-diagonal values in [-1, 1], diagonal in [-1, 0].
class SignedMatrix {
 public:
  explicit SignedMatrix(std::size_t d);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double at(std::size_t i, std::size_t j) const { return values_(idx(i), idx(j)); }
  bool present(std::size_t i, std::size_t j) const { return mask_(idx(i), idx(j)) != 0; }
  // Throws if the value is outside the allowed range for (i, j).
  void set(std::size_t i, std::size_t j, double value);
  void clear(std::size_t i, std::size_t j);
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  Eigen::MatrixXd values_;
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> mask_;
};

SignedMatrix sample_signed(std::size_t d, double p, Rng& rng);

constexpr double boundary_tol = 1e-12;

// f_i = (Cx)_i - x_i sum_k (Cx)_k, except 0 where x_i = 0 (to boundary_tol)
// and f_i < 0.
Vec constrained_field(const SignedMatrix& c, const Vec& x);

// The unconstrained f.
Vec signed_field(const SignedMatrix& c, const Vec& x);

struct WitnessOptions {
  double h = 0.01;
  double t_max = 20.0;       // horizon before contact
  double t_after = 20.0;     // horizon after contact
  double sample_every = 0.1; // drift series spacing
  double contact_tol = 1e-10;
  std::size_t jobs = 1;
};

struct Witness {
  std::size_t trial = 0;
  SignedMatrix c{2};
  double t_contact = 0.0;
  std::size_t vertex = 0;  // the component that reached 0
  Vec x_at_contact;
  double f_at_contact = 0.0;      // f_r, negative at a witness
  double mass_derivative = 0.0;   // sum_i of the constrained field
  double proof_expression = 0.0;  // sum_{j != r} (Cx)_j - sum_k (Cx)_k
  std::vector<std::pair<double, double>> drift_series;  // (t, |sum x - 1|)
  double max_drift = 0.0;
};

struct TrialSummary {
  std::size_t trial = 0;
  bool contact = false;  // some component reached the boundary
  bool witness = false;  // ... with a negative f there
  double t_contact = 0.0;
  double mass_derivative = 0.0;
  double max_drift = 0.0;
};

struct WitnessReport {
  std::size_t d = 0;
  double p = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t witnesses = 0;
  std::optional<Witness> first;
  std::vector<TrialSummary> summaries;
};

// Follows one trajectory of the constrained system without any
// renormalization. Returns the witness if a component hits 0 with f < 0.
std::optional<Witness> follow_to_boundary(const SignedMatrix& c, const Vec& x0, const WitnessOptions& opts,
                                          TrialSummary* summary = nullptr);

// Samples C and an interior x0 per trial on stream (seed, trial).
WitnessReport demonstrate_inconsistency(std::size_t d, double p, std::size_t trials, std::uint64_t seed,
                                        const WitnessOptions& opts = {});

}  // namespace jknet
