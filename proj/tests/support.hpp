#pragma once

// Shared helpers for the unit and acceptance tests.

#include "flexure/flexure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace flexure::testing {

inline std::vector<double> random_design(std::size_t n, unsigned seed, double lo = 0.2, double hi = 0.9) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

/// Central differences of a scalar function at x, one variable at a time.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               const std::vector<double>& x, double h) {
  std::vector<double> out(x.size());
  std::vector<double> xp(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    out[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

/// max_i |a_i - fd_i| / max(|fd_i|, 1e-3 ||fd||_inf). Components far below
/// the gradient's scale are measured against that scale instead of their
/// own size, where central differences carry no relative accuracy.
inline double gradient_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
  double scale = 0.0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double den = std::max(std::abs(fd[i]), 1e-3 * scale);
    if (den > 0.0) worst = std::max(worst, std::abs(analytic[i] - fd[i]) / den);
  }
  return worst;
}

/// A ResponseEvaluator wired like the driver does it, for gradient checks.
struct ProblemFixture {
  Mesh mesh;
  ResponseEvaluator eval;

  ProblemFixture(int nelx, int nely, std::vector<std::string> doc, std::vector<std::string> dof,
                 const VariantConfig& variant = {}, std::vector<double> emax = {})
      : mesh(nelx, nely), eval(mesh, validate_degree_sets(doc, dof), configure_variant(variant, 2.0, dof),
                               settings(dof, std::move(emax))) {}

  static ProblemSettings settings(const std::vector<std::string>& dof, std::vector<double> emax) {
    ProblemSettings ps;
    ps.symmetry = {MirrorAxis::x};
    ps.emax = emax.empty() ? std::vector<double>(dof.size(), 1.2) : std::move(emax);
    return ps;
  }
};

} // namespace flexure::testing
