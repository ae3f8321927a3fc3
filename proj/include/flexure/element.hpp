#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flexure {

/// Element stiffness at unit Young's modulus on a unit square/cube.
struct ElementStiffness {
  Eigen::MatrixXd matrix;
  double poisson = 0.0;
};

namespace detail {

inline void check_poisson(double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) {
    throw std::invalid_argument("Poisson ratio must be in [0, 0.5), got " + std::to_string(nu));
  }
}

// Reference-cube corner signs in local node order.
constexpr std::array<std::array<int, 3>, 8> kHexCorners{{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
}};

} // namespace detail

/// Plane-stress constitutive matrix, strain order (xx, yy, xy).
inline Eigen::Matrix3d plane_stress_matrix(double nu, double young = 1.0) {
  Eigen::Matrix3d d;
  d << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
  return d * (young / (1.0 - nu * nu));
}

/// Isotropic 3D constitutive matrix, strain order (xx, yy, zz, xy, yz, zx)
/// with engineering shear strains.
inline Eigen::Matrix<double, 6, 6> isotropic_matrix_3d(double nu, double young = 1.0) {
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  const double s = young / ((1.0 + nu) * (1.0 - 2.0 * nu));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = s * (i == j ? 1.0 - nu : nu);
    d(3 + i, 3 + i) = s * (1.0 - 2.0 * nu) / 2.0;
  }
  return d;
}

/// Strain-displacement matrix of the unit bilinear quad at local point
/// (x, y) in [0,1]^2.
inline Eigen::Matrix<double, 3, 8> quad_strain_matrix(double x, double y) {
  constexpr std::array<double, 4> sx{0, 1, 1, 0};
  constexpr std::array<double, 4> sy{0, 0, 1, 1};
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    // N_a = (sx ? x : 1-x) * (sy ? y : 1-y)
    const double fx = sx[a] ? x : 1.0 - x;
    const double fy = sy[a] ? y : 1.0 - y;
    const double dx = (sx[a] ? 1.0 : -1.0) * fy;
    const double dy = (sy[a] ? 1.0 : -1.0) * fx;
    b(0, 2 * a) = dx;
    b(1, 2 * a + 1) = dy;
    b(2, 2 * a) = dy;
    b(2, 2 * a + 1) = dx;
  }
  return b;
}

/// Strain-displacement matrix of the unit trilinear hex at reference point
/// (xi, eta, zeta) in [-1,1]^3.
inline Eigen::Matrix<double, 6, 24> hex_strain_matrix(double xi, double eta, double zeta) {
  Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
  for (int a = 0; a < 8; ++a) {
    const auto& c = detail::kHexCorners[a];
    const double fx = 1.0 + c[0] * xi, fy = 1.0 + c[1] * eta, fz = 1.0 + c[2] * zeta;
    // d/dx = 2 d/dxi on the unit cube
    const double dx = 0.25 * c[0] * fy * fz;
    const double dy = 0.25 * c[1] * fx * fz;
    const double dz = 0.25 * c[2] * fx * fy;
    b(0, 3 * a) = dx;
    b(1, 3 * a + 1) = dy;
    b(2, 3 * a + 2) = dz;
    b(3, 3 * a) = dy;
    b(3, 3 * a + 1) = dx;
    b(4, 3 * a + 1) = dz;
    b(4, 3 * a + 2) = dy;
    b(5, 3 * a) = dz;
    b(5, 3 * a + 2) = dx;
  }
  return b;
}

/// Closed-form plane-stress bilinear quad stiffness (unit square, E = 1).
inline ElementStiffness element_stiffness_2d(double nu) {
  detail::check_poisson(nu);
  const double k[8] = {0.5 - nu / 6.0,          0.125 + nu / 8.0,  -0.25 - nu / 12.0, -0.125 + 3.0 * nu / 8.0,
                       -0.25 + nu / 12.0,       -0.125 - nu / 8.0, nu / 6.0,          0.125 - 3.0 * nu / 8.0};
  // index pattern of the classical coefficient layout
  constexpr int p[8][8] = {
      {0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1}, {3, 6, 5, 0, 7, 2, 1, 4},
      {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6}, {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0},
  };
  ElementStiffness ke{Eigen::MatrixXd(8, 8), nu};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) ke.matrix(i, j) = k[p[i][j]] / (1.0 - nu * nu);
  return ke;
}

/// Trilinear hex stiffness on the unit cube (E = 1), 2x2x2 Gauss quadrature.
inline ElementStiffness element_stiffness_3d(double nu) {
  detail::check_poisson(nu);
  const auto d = isotropic_matrix_3d(nu);
  const double g = 1.0 / std::sqrt(3.0);
  Eigen::Matrix<double, 24, 24> k = Eigen::Matrix<double, 24, 24>::Zero();
  for (double xi : {-g, g})
    for (double eta : {-g, g})
      for (double zeta : {-g, g}) {
        const auto b = hex_strain_matrix(xi, eta, zeta);
        k += b.transpose() * d * b * 0.125; // unit weights times det J
      }
  ElementStiffness ke{Eigen::MatrixXd(0.5 * (k + k.transpose())), nu};
  return ke;
}

inline ElementStiffness element_stiffness(int dim, double nu) {
  return dim == 2 ? element_stiffness_2d(nu) : element_stiffness_3d(nu);
}

} // namespace flexure
