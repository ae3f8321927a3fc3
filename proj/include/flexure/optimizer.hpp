#pragma once

// Method of Moving Asymptotes with a primal-dual interior-point subproblem
// solver. Problem form:
//
//   min  f0(x) + a0 z + sum_i (c_i y_i + d_i y_i^2 / 2)
//   s.t. f_i(x) - a_i z - y_i <= 0,   xmin <= x <= xmax,   y, z >= 0

#include "flexure/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace flexure {

struct MoveLimitSettings {
  double init = 0.2;
  double increase = 1.2;
  double decrease = 0.5;
  double min = 1e-4;
  double max = 0.5;
  /// Fraction of moving variables that reverse direction above which the
  /// limit shrinks.
  double oscillation_threshold = 0.15;
  /// Steps at or below this size are solver noise: such a variable is
  /// neither moving nor oscillating.
  double oscillation_floor = 1e-4;
  /// Same floor as a fraction of the current limit; the larger one applies.
  double oscillation_floor_relative = 0.75;
};

/// Per-run move limit: shrink when too many of the moving variables reverse
/// direction between consecutive steps, grow otherwise.
inline double update_movelimit(std::span<const double> x, std::span<const double> x_prev,
                               std::span<const double> x_prev2, double ml, const MoveLimitSettings& s = {}) {
  if (x_prev2.empty()) return ml;
  const double floor = std::max(s.oscillation_floor, s.oscillation_floor_relative * ml);
  std::size_t moving = 0, osc = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d1 = x[j] - x_prev[j], d0 = x_prev[j] - x_prev2[j];
    if (std::abs(d1) <= floor || std::abs(d0) <= floor) continue;
    ++moving;
    if (d1 * d0 < 0.0) ++osc;
  }
  const double frac = moving ? double(osc) / double(moving) : 0.0;
  const double next = frac > s.oscillation_threshold ? ml * s.decrease : ml * s.increase;
  return std::clamp(next, s.min, s.max);
}

struct MmaSettings {
  double asymptote_init = 0.5;
  double asymptote_increase = 1.2;
  double asymptote_decrease = 0.7;
  double albefa = 0.1;
  double raa0 = 1e-5;
  double a0 = 1.0;
  double c = 1000.0;
  double d = 1.0;
  double epsilon_min = 1e-10;
  MoveLimitSettings move;
};

/// KKT multipliers of the last subproblem.
struct MmaMultipliers {
  Eigen::VectorXd y, lam, mu, s;
  Eigen::ArrayXd xsi, eta;
  double z = 0.0, zet = 0.0;
};

struct MmaStep {
  std::vector<double> x;
  bool infeasible = false; // artificial variables y stayed positive
  double move_limit = 0.0;
};

/// Subproblem data in the separable MMA form (exposed for testing).
struct MmaSubproblem {
  Eigen::ArrayXd low, upp, alpha, beta, p0, q0;
  Eigen::MatrixXd p, q; // m x n
  Eigen::VectorXd b;
  double a0 = 1.0;
  Eigen::VectorXd a, c, d;
};

namespace detail {

struct SubSolution {
  Eigen::ArrayXd x;
  MmaMultipliers mult;
};

// Svanberg's primal-dual Newton method with decreasing barrier epsi.
inline SubSolution solve_subproblem(const MmaSubproblem& sp, double epsimin) {
  const Eigen::Index n = sp.low.size(), m = sp.b.size();
  using AX = Eigen::ArrayXd;
  using VX = Eigen::VectorXd;
  const AX een = AX::Ones(n);
  const VX eem = VX::Ones(m);
  double epsi = 1.0;
  AX x = 0.5 * (sp.alpha + sp.beta);
  VX y = eem, lam = eem, s = eem;
  VX mu = (0.5 * sp.c.array()).max(1.0).matrix();
  double z = 1.0, zet = 1.0;
  AX xsi = (een / (x - sp.alpha)).max(1.0);
  AX eta = (een / (sp.beta - x)).max(1.0);

  auto residual = [&](const AX& x, const VX& y, double z, const VX& lam, const AX& xsi, const AX& eta,
                      const VX& mu, double zet, const VX& s, double epsi) {
    const AX ux1 = sp.upp - x, xl1 = x - sp.low;
    const AX plam = sp.p0 + (sp.p.transpose() * lam).array();
    const AX qlam = sp.q0 + (sp.q.transpose() * lam).array();
    const VX gvec = sp.p * (1.0 / ux1).matrix() + sp.q * (1.0 / xl1).matrix();
    const AX rex = plam / (ux1 * ux1) - qlam / (xl1 * xl1) - xsi + eta;
    const VX rey = sp.c + sp.d.cwiseProduct(y) - mu - lam;
    const double rez = sp.a0 - zet - sp.a.dot(lam);
    const VX relam = gvec - sp.a * z - y + s - sp.b;
    const AX rexsi = xsi * (x - sp.alpha) - epsi;
    const AX reeta = eta * (sp.beta - x) - epsi;
    const VX remu = (mu.array() * y.array() - epsi).matrix();
    const double rezet = zet * z - epsi;
    const VX res = (lam.array() * s.array() - epsi).matrix();
    VX r(3 * n + 4 * m + 2);
    r << rex.matrix(), rey, rez, relam, rexsi.matrix(), reeta.matrix(), remu, rezet, res;
    return r;
  };

  while (epsi > epsimin) {
    VX r = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi);
    double resnorm = r.norm(), resmax = r.cwiseAbs().maxCoeff();
    int inner = 0;
    while (resmax > 0.9 * epsi && inner < 200) {
      ++inner;
      const AX ux1 = sp.upp - x, xl1 = x - sp.low;
      const AX ux2 = ux1 * ux1, xl2 = xl1 * xl1;
      const AX ux3 = ux1 * ux2, xl3 = xl1 * xl2;
      const AX plam = sp.p0 + (sp.p.transpose() * lam).array();
      const AX qlam = sp.q0 + (sp.q.transpose() * lam).array();
      const VX gvec = sp.p * (1.0 / ux1).matrix() + sp.q * (1.0 / xl1).matrix();
      const Eigen::MatrixXd gg =
          sp.p * (1.0 / ux2).matrix().asDiagonal() - sp.q * (1.0 / xl2).matrix().asDiagonal();
      const AX dpsidx = plam / ux2 - qlam / xl2;
      const AX delx = dpsidx - epsi / (x - sp.alpha) + epsi / (sp.beta - x);
      const VX dely = sp.c + sp.d.cwiseProduct(y) - lam - (epsi / y.array()).matrix();
      const double delz = sp.a0 - sp.a.dot(lam) - epsi / z;
      const VX dellam = gvec - sp.a * z - y - sp.b + (epsi / lam.array()).matrix();
      const AX diagx = 2.0 * (plam / ux3 + qlam / xl3) + xsi / (x - sp.alpha) + eta / (sp.beta - x);
      const AX diagxinv = 1.0 / diagx;
      const VX diagy = sp.d + (mu.array() / y.array()).matrix();
      const VX diagyinv = (1.0 / diagy.array()).matrix();
      const VX diaglam = (s.array() / lam.array()).matrix();
      const VX diaglamyi = diaglam + diagyinv;

      AX dx;
      VX dlam;
      double dz;
      if (m < n) {
        const VX blam = dellam + dely.cwiseProduct(diagyinv) - gg * (delx * diagxinv).matrix();
        Eigen::MatrixXd aa(m + 1, m + 1);
        aa.topLeftCorner(m, m) = Eigen::MatrixXd(diaglamyi.asDiagonal()) + gg * diagxinv.matrix().asDiagonal() * gg.transpose();
        aa.topRightCorner(m, 1) = sp.a;
        aa.bottomLeftCorner(1, m) = sp.a.transpose();
        aa(m, m) = -zet / z;
        VX bb(m + 1);
        bb << blam, delz;
        const VX sol = aa.lu().solve(bb);
        dlam = sol.head(m);
        dz = sol[m];
        dx = -delx * diagxinv - (gg.transpose() * dlam).array() * diagxinv;
      } else {
        const VX diaglamyiinv = (1.0 / diaglamyi.array()).matrix();
        const VX dellamyi = dellam + dely.cwiseProduct(diagyinv);
        Eigen::MatrixXd axx = Eigen::MatrixXd(diagx.matrix().asDiagonal()) +
                              gg.transpose() * diaglamyiinv.asDiagonal() * gg;
        const double azz = zet / z + sp.a.dot(sp.a.cwiseProduct(diaglamyiinv));
        const VX axz = -gg.transpose() * sp.a.cwiseProduct(diaglamyiinv);
        const VX bx = delx.matrix() + gg.transpose() * dellamyi.cwiseProduct(diaglamyiinv);
        const double bz = delz - sp.a.dot(dellamyi.cwiseProduct(diaglamyiinv));
        Eigen::MatrixXd aa(n + 1, n + 1);
        aa.topLeftCorner(n, n) = axx;
        aa.topRightCorner(n, 1) = axz;
        aa.bottomLeftCorner(1, n) = axz.transpose();
        aa(n, n) = azz;
        VX bb(n + 1);
        bb << -bx, -bz;
        const VX sol = aa.lu().solve(bb);
        dx = sol.head(n).array();
        dz = sol[n];
        dlam = (gg * dx.matrix()).cwiseProduct(diaglamyiinv) - dz * sp.a.cwiseProduct(diaglamyiinv) +
               dellamyi.cwiseProduct(diaglamyiinv);
      }
      const VX dy = -dely.cwiseProduct(diagyinv) + dlam.cwiseProduct(diagyinv);
      const AX dxsi = -xsi + epsi / (x - sp.alpha) - (xsi * dx) / (x - sp.alpha);
      const AX deta = -eta + epsi / (sp.beta - x) + (eta * dx) / (sp.beta - x);
      const VX dmu = -mu + (epsi / y.array()).matrix() - (mu.array() * dy.array() / y.array()).matrix();
      const double dzet = -zet + epsi / z - zet * dz / z;
      const VX ds = -s + (epsi / lam.array()).matrix() - (s.array() * dlam.array() / lam.array()).matrix();

      double stm = 1.0;
      auto bound = [&](auto&& v, auto&& dv) {
        for (Eigen::Index i = 0; i < v.size(); ++i) stm = std::max(stm, -1.01 * dv[i] / v[i]);
      };
      bound(y, dy);
      bound(Eigen::Matrix<double, 1, 1>(z), Eigen::Matrix<double, 1, 1>(dz));
      bound(lam, dlam);
      bound(xsi, dxsi);
      bound(eta, deta);
      bound(mu, dmu);
      bound(Eigen::Matrix<double, 1, 1>(zet), Eigen::Matrix<double, 1, 1>(dzet));
      bound(s, ds);
      for (Eigen::Index i = 0; i < n; ++i) {
        stm = std::max(stm, -1.01 * dx[i] / (x[i] - sp.alpha[i]));
        stm = std::max(stm, 1.01 * dx[i] / (sp.beta[i] - x[i]));
      }
      double step = 1.0 / stm;

      const AX x0 = x, xsi0 = xsi, eta0 = eta;
      const VX y0 = y, lam0 = lam, mu0 = mu, s0 = s;
      const double z0 = z, zet0 = zet;
      double resnew = 2.0 * resnorm;
      for (int it = 0; it < 50 && resnew > resnorm; ++it) {
        x = x0 + step * dx;
        y = y0 + step * dy;
        z = z0 + step * dz;
        lam = lam0 + step * dlam;
        xsi = xsi0 + step * dxsi;
        eta = eta0 + step * deta;
        mu = mu0 + step * dmu;
        zet = zet0 + step * dzet;
        s = s0 + step * ds;
        r = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi);
        resnew = r.norm();
        step *= 0.5;
      }
      resnorm = resnew;
      resmax = r.cwiseAbs().maxCoeff();
    }
    epsi *= 0.1;
  }
  SubSolution out;
  out.x = x;
  out.mult = {y, lam, mu, s, xsi, eta, z, zet};
  return out;
}

} // namespace detail

/// MMA state machine for min f0(x) s.t. g_i(x) <= 0 over box bounds.
class MmaOptimizer {
public:
  MmaOptimizer(std::size_t n, std::size_t m, double xmin, double xmax, MmaSettings settings = {})
      : n_(Eigen::Index(n)), m_(Eigen::Index(m)), xmin_(Eigen::ArrayXd::Constant(n_, xmin)),
        xmax_(Eigen::ArrayXd::Constant(n_, xmax)), settings_(settings), move_limit_(settings.move.init) {}

  std::size_t iteration() const noexcept { return iter_; }
  double move_limit() const noexcept { return move_limit_; }
  const MmaMultipliers& multipliers() const noexcept { return mult_; }
  const Eigen::ArrayXd& lower_asymptotes() const noexcept { return low_; }
  const Eigen::ArrayXd& upper_asymptotes() const noexcept { return upp_; }
  const MmaSubproblem& last_subproblem() const noexcept { return sub_; }
  const MmaSettings& settings() const noexcept { return settings_; }

  /// One outer iteration: builds and solves the convex approximation at x.
  MmaStep step(std::span<const double> x, double f0, std::span<const double> df0,
               std::span<const double> g, std::span<const std::vector<double>> dg) {
    check_inputs(x, f0, df0, g, dg);
    ++iter_;
    const Eigen::ArrayXd xval = Eigen::Map<const Eigen::ArrayXd>(x.data(), n_);

    // move limit reacts to the trajectory x_{k-2}, x_{k-1}, x_k
    if (iter_ > 2) {
      move_limit_ = update_movelimit(x, std::span<const double>(xold1_.data(), std::size_t(n_)),
                                     std::span<const double>(xold2_.data(), std::size_t(n_)), move_limit_,
                                     settings_.move);
    }

    const Eigen::ArrayXd range = xmax_ - xmin_;
    if (iter_ <= 2) {
      low_ = xval - settings_.asymptote_init * range;
      upp_ = xval + settings_.asymptote_init * range;
    } else {
      const Eigen::ArrayXd zzz = (xval - xold1_) * (xold1_ - xold2_);
      Eigen::ArrayXd factor = Eigen::ArrayXd::Ones(n_);
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (zzz[j] > 0.0) factor[j] = settings_.asymptote_increase;
        else if (zzz[j] < 0.0) factor[j] = settings_.asymptote_decrease;
      }
      low_ = xval - factor * (xold1_ - low_);
      upp_ = xval + factor * (upp_ - xold1_);
      low_ = low_.max(xval - 10.0 * range).min(xval - 0.01 * range);
      upp_ = upp_.min(xval + 10.0 * range).max(xval + 0.01 * range);
    }

    MmaSubproblem& sp = sub_;
    sp.low = low_;
    sp.upp = upp_;
    sp.alpha = (low_ + settings_.albefa * (xval - low_)).max(xval - move_limit_ * range).max(xmin_);
    sp.beta = (upp_ - settings_.albefa * (upp_ - xval)).min(xval + move_limit_ * range).min(xmax_);

    const Eigen::ArrayXd ux1 = upp_ - xval, xl1 = xval - low_;
    const Eigen::ArrayXd ux2 = ux1 * ux1, xl2 = xl1 * xl1;
    const Eigen::ArrayXd d0 = Eigen::Map<const Eigen::ArrayXd>(df0.data(), n_);
    {
      const Eigen::ArrayXd pp = d0.max(0.0), qq = (-d0).max(0.0);
      const Eigen::ArrayXd pq = 0.001 * (pp + qq) + settings_.raa0 / range;
      sp.p0 = (pp + pq) * ux2;
      sp.q0 = (qq + pq) * xl2;
    }
    sp.p.resize(m_, n_);
    sp.q.resize(m_, n_);
    sp.b.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::ArrayXd di = Eigen::Map<const Eigen::ArrayXd>(dg[std::size_t(i)].data(), n_);
      const Eigen::ArrayXd pp = di.max(0.0), qq = (-di).max(0.0);
      const Eigen::ArrayXd pq = 0.001 * (pp + qq) + settings_.raa0 / range;
      sp.p.row(i) = ((pp + pq) * ux2).matrix().transpose();
      sp.q.row(i) = ((qq + pq) * xl2).matrix().transpose();
      sp.b[i] = (sp.p.row(i).array().transpose() / ux1).sum() + (sp.q.row(i).array().transpose() / xl1).sum() -
                g[std::size_t(i)];
    }
    sp.a0 = settings_.a0;
    sp.a = Eigen::VectorXd::Zero(m_);
    sp.c = Eigen::VectorXd::Constant(m_, settings_.c);
    sp.d = Eigen::VectorXd::Constant(m_, settings_.d);

    auto sol = detail::solve_subproblem(sp, settings_.epsilon_min);
    mult_ = sol.mult;
    xold2_ = iter_ >= 2 ? xold1_ : xval;
    xold1_ = xval;

    MmaStep out;
    out.x.assign(sol.x.data(), sol.x.data() + n_);
    for (Eigen::Index j = 0; j < n_; ++j) out.x[std::size_t(j)] = std::clamp(out.x[std::size_t(j)], xmin_[j], xmax_[j]);
    out.infeasible = m_ > 0 && mult_.y.maxCoeff() > 1e-6;
    out.move_limit = move_limit_;
    return out;
  }

  /// Euclidean norm of the KKT residual of the original problem at x using
  /// the multipliers from the last subproblem.
  double kkt_norm(std::span<const double> x, std::span<const double> df0, std::span<const double> g,
                  std::span<const std::vector<double>> dg) const {
    if (iter_ == 0) return std::numeric_limits<double>::infinity();
    const Eigen::ArrayXd xv = Eigen::Map<const Eigen::ArrayXd>(x.data(), n_);
    Eigen::ArrayXd rex = Eigen::Map<const Eigen::ArrayXd>(df0.data(), n_) - mult_.xsi + mult_.eta;
    for (Eigen::Index i = 0; i < m_; ++i)
      rex += mult_.lam[i] * Eigen::Map<const Eigen::ArrayXd>(dg[std::size_t(i)].data(), n_);
    double sq = rex.square().sum();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double rey = settings_.c + settings_.d * mult_.y[i] - mult_.mu[i] - mult_.lam[i];
      const double relam = g[std::size_t(i)] - mult_.y[i] + mult_.s[i];
      sq += rey * rey + relam * relam + std::pow(mult_.mu[i] * mult_.y[i], 2) + std::pow(mult_.lam[i] * mult_.s[i], 2);
    }
    const double rez = settings_.a0 - mult_.zet;
    sq += rez * rez + std::pow(mult_.zet * mult_.z, 2);
    sq += (mult_.xsi * (xv - xmin_)).square().sum() + (mult_.eta * (xmax_ - xv)).square().sum();
    return std::sqrt(sq);
  }

private:
  void check_inputs(std::span<const double> x, double f0, std::span<const double> df0, std::span<const double> g,
                    std::span<const std::vector<double>> dg) const {
    if (Eigen::Index(x.size()) != n_ || Eigen::Index(df0.size()) != n_ || Eigen::Index(g.size()) != m_ ||
        Eigen::Index(dg.size()) != m_)
      throw std::invalid_argument("MMA step: dimension mismatch");
    auto finite = [](std::span<const double> v) {
      return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
    };
    bool ok = std::isfinite(f0) && finite(x) && finite(df0) && finite(g);
    for (const auto& row : dg) ok = ok && Eigen::Index(row.size()) == n_ && finite(row);
    if (!ok) throw NumericalError("MMA step: non-finite or malformed input");
  }

  Eigen::Index n_, m_;
  Eigen::ArrayXd xmin_, xmax_;
  MmaSettings settings_;
  double move_limit_;
  std::size_t iter_ = 0;
  Eigen::ArrayXd xold1_, xold2_, low_, upp_;
  MmaSubproblem sub_;
  MmaMultipliers mult_;
};

/// Why the design loop stopped (or `none` while running).
enum class StopReason { none, design_change, kkt, max_iterations };

inline const char* to_string(StopReason r) {
  switch (r) {
  case StopReason::none: return "none";
  case StopReason::design_change: return "design-change";
  case StopReason::kkt: return "kkt";
  case StopReason::max_iterations: return "max-iterations";
  }
  return "?";
}

struct TerminationLimits {
  double design_change = 1e-3;
  double kkt = 1e-4;
  double feasibility = 1e-4;
  std::size_t max_iterations = 500;
};

struct TerminationReport {
  bool converged = false;
  StopReason reason = StopReason::none;
  double change = 0.0;
  double kkt_norm = 0.0;
  bool feasible = false;
  bool stop() const noexcept { return reason != StopReason::none; }
};

/// Converged iff all g <= tol_feas and (change < eps or kkt < tol_kkt);
/// otherwise stops only at k_max.
inline TerminationReport check_termination(double change, double kkt_norm, std::span<const double> g, std::size_t k,
                                           const TerminationLimits& limits) {
  TerminationReport r;
  r.change = change;
  r.kkt_norm = kkt_norm;
  r.feasible = std::all_of(g.begin(), g.end(), [&](double v) { return v <= limits.feasibility; });
  if (r.feasible && change < limits.design_change) {
    r.converged = true;
    r.reason = StopReason::design_change;
  } else if (r.feasible && kkt_norm < limits.kkt) {
    r.converged = true;
    r.reason = StopReason::kkt;
  } else if (k >= limits.max_iterations) {
    r.reason = StopReason::max_iterations;
  }
  return r;
}

} // namespace flexure
