#pragma once

#include "flexure/errors.hpp"
#include "flexure/mesh.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexure {

using Field = std::vector<double>;

namespace detail {
inline void check_length(std::size_t got, Index want, const char* what) {
  if (Index(got) != want) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(got) + " != " +
                                std::to_string(want));
  }
}
} // namespace detail

/// Row-normalized conic density filter, w_ij ~ max(0, r - |c_i - c_j|).
class FilterOperator {
public:
  FilterOperator(const Mesh& mesh, double radius) : radius_(radius) {
    if (!(radius >= 1.0)) throw ConfigError("filter radius must be >= 1 element, got " + std::to_string(radius));
    const int reach = int(std::ceil(radius)) - 1;
    const int nz = mesh.dim() == 3 ? mesh.nelz() : 1;
    std::vector<Eigen::Triplet<double, int>> trip;
    for (Index i = 0; i < mesh.element_count(); ++i) {
      const auto c = mesh.element_coords(i);
      const std::size_t row_start = trip.size();
      double sum = 0.0;
      for (int dz = -reach; dz <= reach; ++dz) {
        const int z = c[2] + dz;
        if (mesh.dim() == 2 ? dz != 0 : (z < 0 || z >= nz)) continue;
        for (int dx = -reach; dx <= reach; ++dx) {
          const int x = c[0] + dx;
          if (x < 0 || x >= mesh.nelx()) continue;
          for (int dy = -reach; dy <= reach; ++dy) {
            const int y = c[1] + dy;
            if (y < 0 || y >= mesh.nely()) continue;
            const double w = radius - std::sqrt(double(dx * dx + dy * dy + dz * dz));
            if (w <= 0.0) continue;
            trip.emplace_back(int(i), int(mesh.element_index(x, y, z)), w);
            sum += w;
          }
        }
      }
      for (std::size_t t = row_start; t < trip.size(); ++t)
        trip[t] = Eigen::Triplet<double, int>(trip[t].row(), trip[t].col(), trip[t].value() / sum);
    }
    h_.resize(mesh.element_count(), mesh.element_count());
    h_.setFromTriplets(trip.begin(), trip.end());
    h_.makeCompressed();
    ht_ = h_.transpose();
  }

  double radius() const noexcept { return radius_; }
  Index size() const noexcept { return h_.rows(); }
  /// Row-major filter matrix (row i holds the weights of element i).
  const Eigen::SparseMatrix<double, Eigen::RowMajor, int>& matrix() const noexcept { return h_; }

  /// x_tilde = H x
  Field apply(std::span<const double> x) const {
    detail::check_length(x.size(), size(), "apply_filter");
    return multiply(h_, x);
  }

  /// s = H^T s_tilde
  Field chain_rule(std::span<const double> s_tilde) const {
    detail::check_length(s_tilde.size(), size(), "filter_chain_rule");
    return multiply(ht_, s_tilde);
  }

private:
  static Field multiply(const Eigen::SparseMatrix<double, Eigen::RowMajor, int>& m, std::span<const double> x) {
    Field out(std::size_t(m.rows()), 0.0);
    for (Index i = 0; i < m.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor, int>::InnerIterator it(m, i); it; ++it)
        acc += it.value() * x[it.col()];
      out[i] = acc;
    }
    return out;
  }

  double radius_;
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> h_, ht_;
};

inline FilterOperator build_filter(const Mesh& mesh, double radius) { return FilterOperator(mesh, radius); }
inline Field apply_filter(const FilterOperator& h, std::span<const double> x) { return h.apply(x); }
inline Field filter_chain_rule(const FilterOperator& h, std::span<const double> s) { return h.chain_rule(s); }

struct Projection {
  Field value;
  Field derivative; // d value / d input, elementwise
};

/// Smoothed Heaviside (tanh) threshold projection. beta = 0 is the identity.
inline Projection heaviside_project(std::span<const double> x, double beta, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("projection threshold must be in (0,1), got " + std::to_string(eta));
  if (!(beta >= 0.0)) throw ConfigError("projection steepness must be >= 0");
  Projection out{Field(x.size()), Field(x.size())};
  if (beta < 1e-12) {
    std::copy(x.begin(), x.end(), out.value.begin());
    std::fill(out.derivative.begin(), out.derivative.end(), 1.0);
    return out;
  }
  const double a = std::tanh(beta * eta);
  const double den = a + std::tanh(beta * (1.0 - eta));
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = std::tanh(beta * (x[j] - eta));
    out.value[j] = (a + t) / den;
    out.derivative[j] = beta * (1.0 - t * t) / den;
  }
  return out;
}

struct Interpolation {
  Field fraction; // E / E_solid
  Field gamma;    // (1 - eps) dR/dx
};

/// Modified SIMP: fraction = eps + (1 - eps) x^p.
inline Interpolation simp(std::span<const double> x, double penalty, double eps) {
  if (!(penalty >= 1.0)) throw ConfigError("SIMP penalty must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("stiffness ratio must be in (0,1)");
  Interpolation out{Field(x.size()), Field(x.size())};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = std::clamp(x[j], 0.0, 1.0);
    out.fraction[j] = eps + (1.0 - eps) * std::pow(v, penalty);
    out.gamma[j] = (1.0 - eps) * penalty * std::pow(v, penalty - 1.0);
  }
  return out;
}

/// Mirror axes of the structured grid. `x` mirrors ex -> nelx-1-ex (a
/// vertical symmetry line in 2D), and similarly for y and z.
enum class MirrorAxis { x, y, z };

/// Averages every mirror pair for each axis in turn. The map is a symmetric
/// linear projection, so the gradient uses the same operation.
inline Field symmetrize(const Mesh& mesh, std::span<const double> x, std::span<const MirrorAxis> axes) {
  detail::check_length(x.size(), mesh.element_count(), "symmetrize");
  Field out(x.begin(), x.end());
  for (MirrorAxis axis : axes) {
    if (axis == MirrorAxis::z && mesh.dim() != 3) throw ConfigError("z mirror axis needs a 3D mesh");
    Field next(out.size());
    for (Index e = 0; e < mesh.element_count(); ++e) {
      auto c = mesh.element_coords(e);
      switch (axis) {
      case MirrorAxis::x: c[0] = mesh.nelx() - 1 - c[0]; break;
      case MirrorAxis::y: c[1] = mesh.nely() - 1 - c[1]; break;
      case MirrorAxis::z: c[2] = mesh.nelz() - 1 - c[2]; break;
      }
      const Index m = mesh.element_index(c[0], c[1], c[2]);
      next[e] = 0.5 * (out[e] + out[m]);
    }
    out = std::move(next);
  }
  return out;
}

inline Field symmetrize_gradient(const Mesh& mesh, std::span<const double> s, std::span<const MirrorAxis> axes) {
  return symmetrize(mesh, s, axes);
}

} // namespace flexure
