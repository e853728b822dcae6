#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jknet/error.hpp"
#include "jknet/graph.hpp"

namespace jknet {

namespace {

struct ClassSpectrum {
  double rho = 0.0;
  std::vector<double> vector;  // indexed like the class member list
};

// Power iteration on A + I for an irreducible class. The shift makes the
// matrix primitive, so the iteration cannot cycle on periodic classes.
ClassSpectrum pf_irreducible(const InteractionMatrix& c, const VertexSet& members,
                             const SpectralOptions& opts) {
  const std::size_t m = members.size();
  std::vector<std::size_t> local(c.size(), m);
  for (std::size_t a = 0; a < m; ++a) local[members[a]] = a;
  std::vector<std::vector<std::size_t>> in(m);
  for (std::size_t a = 0; a < m; ++a)
    for (Vertex j : c.predecessors(members[a]))
      if (local[j] < m) in[a].push_back(local[j]);

  std::vector<double> v(m, 1.0 / static_cast<double>(m)), av(m);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    double total = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      double s = 0.0;
      for (std::size_t b : in[a]) s += v[b];
      av[a] = s;
      total += s;
    }
    // |v|_1 == 1, so the Rayleigh-type estimate is just the mass of A v.
    const double lambda = total;
    double residual = 0.0;
    for (std::size_t a = 0; a < m; ++a) residual += std::abs(av[a] - lambda * v[a]);
    if (residual <= opts.tol) return {lambda, v};
    const double norm = total + 1.0;
    for (std::size_t a = 0; a < m; ++a) v[a] = (av[a] + v[a]) / norm;
  }
  throw NonConvergenceError("power iteration did not converge on a class of size " +
                            std::to_string(m) + " within " +
                            std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace

SpectralData spectral_radius_pf(const InteractionMatrix& c, const SpectralOptions& opts) {
  const std::size_t d = c.size();
  // Tarjan order: sinks first.
  const auto classes = strongly_connected_components(c);
  const std::size_t k = classes.size();
  std::vector<std::size_t> class_of(d);
  for (std::size_t s = 0; s < k; ++s)
    for (Vertex v : classes[s]) class_of[v] = s;

  std::vector<ClassSpectrum> spectra(k);
  double rho = 0.0;
  bool cyclic = false;
  for (std::size_t s = 0; s < k; ++s) {
    if (classes[s].size() < 2) continue;
    cyclic = true;
    spectra[s] = pf_irreducible(c, classes[s], opts);
    rho = std::max(rho, spectra[s].rho);
  }
  SpectralData out;
  if (!cyclic) return out;
  out.lambda = rho;

  const double eq_tol = 1e-9 * std::max(1.0, rho);
  std::vector<bool> dominant(k, false);
  for (std::size_t s = 0; s < k; ++s)
    dominant[s] = classes[s].size() > 1 && spectra[s].rho >= rho - eq_tol;

  std::vector<std::vector<std::size_t>> class_succ(k);
  for (Vertex j = 0; j < d; ++j)
    for (Vertex i : c.successors(j))
      if (class_of[i] != class_of[j]) class_succ[class_of[j]].push_back(class_of[i]);

  // Sinks come first, so successors of class s have smaller indices.
  std::vector<bool> dominant_below(k, false);
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t t : class_succ[s])
      if (dominant[t] || dominant_below[t]) dominant_below[s] = true;

  std::vector<std::size_t> chain(k, 0);
  for (std::size_t s = k; s-- > 0;) {
    chain[s] += dominant[s] ? 1 : 0;
    for (std::size_t t : class_succ[s]) chain[t] = std::max(chain[t], chain[s]);
  }
  out.dominant_chain = *std::max_element(chain.begin(), chain.end());

  std::vector<std::size_t> distinguished;
  for (std::size_t s = 0; s < k; ++s)
    if (dominant[s] && !dominant_below[s]) distinguished.push_back(s);
  std::sort(distinguished.begin(), distinguished.end(),
            [&](std::size_t a, std::size_t b) { return classes[a].front() < classes[b].front(); });

  for (std::size_t s : distinguished) {
    const VertexSet& members = classes[s];
    const double rho_s = spectra[s].rho;
    std::vector<double> v(d, 0.0);
    for (std::size_t a = 0; a < members.size(); ++a) v[members[a]] = spectra[s].vector[a];

    // Downstream of s every class has radius < rho_s, so rho_s I - C_DD is a
    // nonsingular M-matrix and the solution is non-negative.
    const auto reach = reachable_from(c, members);
    VertexSet down;
    for (Vertex i = 0; i < d; ++i)
      if (reach[i] && class_of[i] != s) down.push_back(i);
    if (!down.empty()) {
      const auto n = static_cast<Eigen::Index>(down.size());
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) * rho_s;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index q = 0; q < n; ++q)
          if (c.at(down[r], down[q])) a(r, q) -= 1.0;
        for (Vertex j : members)
          if (c.at(down[r], j)) rhs(r) += v[j];
      }
      const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
      for (Eigen::Index r = 0; r < n; ++r) v[down[r]] = std::max(0.0, sol(r));
    }
    const double norm = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= norm;
    out.pf_basis.push_back(std::move(v));
  }
  out.multiplicity = out.pf_basis.size();
  return out;
}

}  // namespace jknet
