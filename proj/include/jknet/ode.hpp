#pragma once

#include <Eigen/Core>

#include <functional>

namespace jknet {

using Vec = Eigen::VectorXd;
using VectorField = std::function<Vec(const Vec&)>;

// Classical fourth-order Runge-Kutta step.
inline Vec rk4_step(const VectorField& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * h * k1);
  const Vec k3 = f(x + 0.5 * h * k2);
  const Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct EmbeddedStep {
  Vec x;       // fifth-order solution
  Vec error;   // difference to the embedded fourth-order solution
};

// Dormand-Prince 5(4) step.
EmbeddedStep dopri_step(const VectorField& f, const Vec& x, double h);

}  // namespace jknet
