#include <gtest/gtest.h>

#include "flexure/degrees.hpp"
#include "flexure/element.hpp"
#include "flexure/errors.hpp"
#include "flexure/fem.hpp"
#include "flexure/fem_oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace flexure;

namespace {

// Independent quadrature oracles. Node order: counterclockwise from the
// lower-left corner (and bottom face before top face in 3D).
Eigen::MatrixXd quad_oracle(double nu, int npts) {
  Eigen::Matrix3d d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  d /= 1 - nu * nu;
  const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
  std::vector<double> pts, wts;
  if (npts == 2) {
    pts = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    wts = {0.5, 0.5};
  } else {
    pts = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    wts = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(8, 8);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double x = pts[i], y = pts[j];
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 8);
      for (int a = 0; a < 4; ++a) {
        // N_a = (cx ? x : 1-x)(cy ? y : 1-y)
        const double fx = cx[a] ? x : 1 - x, fy = cy[a] ? y : 1 - y;
        const double dx = (cx[a] ? 1.0 : -1.0) * fy, dy = (cy[a] ? 1.0 : -1.0) * fx;
        b(0, 2 * a) = dx;
        b(1, 2 * a + 1) = dy;
        b(2, 2 * a) = dy;
        b(2, 2 * a + 1) = dx;
      }
      k += wts[i] * wts[j] * b.transpose() * d * b;
    }
  return k;
}

Eigen::MatrixXd hex_oracle(double nu) {
  const double lam = nu / ((1 + nu) * (1 - 2 * nu)), mu = 1 / (2 * (1 + nu));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lam;
    d(i, i) = lam + 2 * mu;
    d(i + 3, i + 3) = mu;
  }
  const double cx[8] = {0, 1, 1, 0, 0, 1, 1, 0}, cy[8] = {0, 0, 1, 1, 0, 0, 1, 1}, cz[8] = {0, 0, 0, 0, 1, 1, 1, 1};
  const double pts[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  const double wts[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(24, 24);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        const double x = pts[i], y = pts[j], z = pts[l];
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 24);
        for (int a = 0; a < 8; ++a) {
          const double fx = cx[a] ? x : 1 - x, fy = cy[a] ? y : 1 - y, fz = cz[a] ? z : 1 - z;
          const double sx = cx[a] ? 1 : -1, sy = cy[a] ? 1 : -1, sz = cz[a] ? 1 : -1;
          const double dx = sx * fy * fz, dy = sy * fx * fz, dz = sz * fx * fy;
          // strain order xx, yy, zz, yz, xz, xy
          b(0, 3 * a) = dx;
          b(1, 3 * a + 1) = dy;
          b(2, 3 * a + 2) = dz;
          b(3, 3 * a + 1) = dz;
          b(3, 3 * a + 2) = dy;
          b(4, 3 * a) = dz;
          b(4, 3 * a + 2) = dx;
          b(5, 3 * a) = dy;
          b(5, 3 * a + 1) = dx;
        }
        k += wts[i] * wts[j] * wts[l] * b.transpose() * d * b;
      }
  return k;
}

Eigen::MatrixXd dense_assembly(const Mesh& mesh, const ElementStiffness& ke, const std::vector<double>& s) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(mesh.dof_count(), mesh.dof_count());
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto dofs = mesh.element_dof_map(e);
    for (std::size_t a = 0; a < dofs.size(); ++a)
      for (std::size_t b = 0; b < dofs.size(); ++b) k(dofs[a], dofs[b]) += s[std::size_t(e)] * ke.matrix(a, b);
  }
  return k;
}

std::vector<double> random_fractions(Index n, unsigned seed, double lo = 0.05) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (auto& v : s) v = u(rng);
  return s;
}

int zero_eigenvalues(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const auto ev = es.eigenvalues();
  int zeros = 0;
  for (Index i = 0; i < ev.size(); ++i) zeros += std::abs(ev[i]) < 1e-10 * ev.cwiseAbs().maxCoeff();
  return zeros;
}

} // namespace

TEST(ElementStiffness, Quad2dKnownEntry) {
  EXPECT_NEAR(element_stiffness_2d(0.3).matrix(0, 0), 0.45 / 0.91, 1e-15);
  EXPECT_NEAR(element_stiffness_2d(0.0).matrix(0, 0), 0.5, 1e-15);
}

TEST(ElementStiffness, Quad2dMatchesQuadrature) {
  for (double nu : {0.0, 0.2, 0.3, 0.45}) {
    const auto ke = element_stiffness_2d(nu).matrix;
    EXPECT_LT((ke - quad_oracle(nu, 2)).cwiseAbs().maxCoeff(), 1e-14) << "nu=" << nu;
    EXPECT_LT((ke - quad_oracle(nu, 3)).cwiseAbs().maxCoeff(), 1e-14) << "nu=" << nu;
  }
}

TEST(ElementStiffness, Quad2dRigidModes) {
  const auto ke = element_stiffness_2d(0.3).matrix;
  Eigen::VectorXd tx(8), ty(8), rot(8);
  const double x[4] = {0, 1, 1, 0}, y[4] = {0, 0, 1, 1};
  for (int a = 0; a < 4; ++a) {
    tx.segment<2>(2 * a) << 1, 0;
    ty.segment<2>(2 * a) << 0, 1;
    rot.segment<2>(2 * a) << -y[a], x[a];
  }
  EXPECT_LT((ke * tx).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((ke * ty).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((ke * rot).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(zero_eigenvalues(ke), 3);
  EXPECT_LT((ke - ke.transpose()).cwiseAbs().maxCoeff(), 1e-14 * ke.cwiseAbs().maxCoeff());
}

TEST(ElementStiffness, PoissonRange) {
  EXPECT_THROW(element_stiffness_2d(0.5), std::invalid_argument);
  EXPECT_THROW(element_stiffness_2d(-0.1), std::invalid_argument);
  EXPECT_THROW(element_stiffness_3d(0.6), std::invalid_argument);
}

TEST(ElementStiffness, Hex3dMatchesQuadrature) {
  const auto ke = element_stiffness_3d(0.3).matrix;
  const auto oracle = hex_oracle(0.3);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 23);
  for (int t = 0; t < 5; ++t) {
    const int i = pick(rng), j = pick(rng);
    EXPECT_NEAR(ke(i, j), oracle(i, j), 1e-12) << i << "," << j;
  }
  EXPECT_LT((ke - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ElementStiffness, Hex3dRigidModes) {
  const auto ke = element_stiffness_3d(0.3).matrix;
  Eigen::VectorXd tx = Eigen::VectorXd::Zero(24);
  for (int a = 0; a < 8; ++a) tx[3 * a] = 1.0;
  EXPECT_LT((ke * tx).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(zero_eigenvalues(ke), 6);
  EXPECT_LT((ke - ke.transpose()).cwiseAbs().maxCoeff(), 1e-14 * ke.cwiseAbs().maxCoeff());
}

TEST(Assembly, SingleElementIsElementMatrix) {
  const Mesh mesh(1, 1);
  const auto ke = element_stiffness_2d(0.3);
  GlobalSystem sys(mesh, ke, interface_dofs(mesh));
  sys.assemble(std::vector<double>{1.0});
  const Eigen::MatrixXd k(sys.stiffness());
  const auto dofs = mesh.element_dof_map(0);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) EXPECT_EQ(k(dofs[a], dofs[b]), ke.matrix(a, b));
}

TEST(Assembly, LinearInFractions) {
  const Mesh mesh(3, 2);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  const auto s = random_fractions(mesh.element_count(), 3);
  sys.assemble(s);
  const Eigen::MatrixXd full(sys.stiffness());
  std::vector<double> half(s);
  for (auto& v : half) v *= 0.5;
  sys.assemble(half);
  const Eigen::MatrixXd k_half(sys.stiffness());
  EXPECT_LT((k_half - 0.5 * full).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, MatchesDenseOracle) {
  for (const Mesh& mesh : {Mesh(2, 2), Mesh(2, 2, 2)}) {
    const auto ke = element_stiffness(mesh.dim(), 0.3);
    GlobalSystem sys(mesh, ke, interface_dofs(mesh));
    const auto s = random_fractions(mesh.element_count(), 11);
    sys.assemble(s);
    const Eigen::MatrixXd k(sys.stiffness());
    const Eigen::MatrixXd oracle = dense_assembly(mesh, ke, s);
    EXPECT_LT((k - oracle).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Assembly, LengthMismatch) {
  const Mesh mesh(2, 2);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  EXPECT_THROW(sys.assemble(std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST(Assembly, PartitionBlocks) {
  const Mesh mesh(3, 3);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(random_fractions(mesh.element_count(), 5));
  const Eigen::MatrixXd k(sys.stiffness()), kff(sys.k_ff()), kfp(sys.k_fp()), kpp(sys.k_pp());
  const auto& f = sys.free_dofs();
  const auto& p = sys.prescribed_dofs();
  EXPECT_EQ(f.size() + p.size(), std::size_t(mesh.dof_count()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) EXPECT_EQ(kff(Index(i), Index(j)), k(f[i], f[j]));
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_EQ(kfp(Index(i), Index(j)), k(f[i], p[j]));
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_EQ(kpp(Index(i), Index(j)), k(p[i], p[j]));
}

TEST(Factor, SolidMeshSucceeds) {
  const Mesh mesh(4, 4);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(16, 1.0));
  EXPECT_NO_THROW(sys.factor());
}

TEST(Factor, FloorModulusSucceeds) {
  const Mesh mesh(4, 4);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(16, 1e-6));
  EXPECT_NO_THROW(sys.factor());
}

TEST(Factor, UnconstrainedIsSingular) {
  const Mesh mesh(3, 3);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), {});
  sys.assemble(std::vector<double>(9, 1.0));
  try {
    sys.factor();
    FAIL() << "expected a singular-system error";
  } catch (const SingularSystemError& e) {
    EXPECT_GE(e.pivot(), 0);
    EXPECT_LT(e.pivot(), mesh.dof_count());
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.pivot())), std::string::npos);
  }
}

TEST(SolveDegree, ZeroData) {
  const Mesh mesh(3, 3);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(9, 1.0));
  sys.factor();
  const auto sol = sys.solve_degree(Vector::Zero(Index(sys.prescribed_dofs().size())));
  EXPECT_EQ(sol.u.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sol.energy, 0.0);
}

TEST(SolveDegree, LengthMismatch) {
  const Mesh mesh(2, 2);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(4, 1.0));
  sys.factor();
  EXPECT_THROW(sys.solve_degree(Vector::Zero(3)), std::invalid_argument);
}

TEST(SolveDegree, SingleElementMatchesCondensation) {
  const Mesh mesh(1, 1);
  const auto ke = element_stiffness_2d(0.3);
  const auto p = interface_dofs(mesh);
  ASSERT_EQ(p.size(), 8u);
  GlobalSystem sys(mesh, ke, p);
  sys.assemble(std::vector<double>{1.0});
  sys.factor();
  const auto field = prescribed_2d(Degree::ty, mesh);
  const auto sol = sys.solve_degree(sys.restrict_prescribed(field.values));
  // everything prescribed: the energy is the plain quadratic form
  const auto map = mesh.element_dof_map(0);
  Vector local(Index(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) local[Index(i)] = field.values[map[i]];
  const double direct = 0.5 * local.dot(ke.matrix * local);
  EXPECT_NEAR(sol.energy, direct, 1e-14);
  EXPECT_NEAR(sol.energy, condensed_energy_oracle(mesh, ke, std::vector<double>{1.0}, p, field.values), 1e-14);
}

TEST(SolveDegree, MatchesDenseOracleAndIsSelfConsistent) {
  const Mesh mesh(4, 4);
  const auto ke = element_stiffness_2d(0.3);
  const auto p = interface_dofs(mesh);
  GlobalSystem sys(mesh, ke, p);
  const auto s = random_fractions(mesh.element_count(), 21);
  sys.assemble(s);
  sys.factor();
  for (Degree d : kDegrees2d) {
    const auto field = prescribed_2d(d, mesh);
    const Vector up = sys.restrict_prescribed(field.values);
    const auto sol = sys.solve_degree(up);
    const double oracle = condensed_energy_oracle(mesh, ke, s, p, field.values);
    EXPECT_NEAR(sol.energy, oracle, 1e-10 * oracle) << to_string(d);

    // energy = sum_e s_e eps_e, with eps_e >= 0
    double sum = 0.0;
    for (Index e = 0; e < mesh.element_count(); ++e) {
      EXPECT_GE(sol.element_energies[std::size_t(e)], 0.0);
      sum += s[std::size_t(e)] * sol.element_energies[std::size_t(e)];
    }
    EXPECT_NEAR(sum, sol.energy, 1e-10 * sol.energy);

    Vector uf(Index(sys.free_dofs().size()));
    for (std::size_t i = 0; i < sys.free_dofs().size(); ++i) uf[Index(i)] = sol.u[sys.free_dofs()[i]];
    // K_ff u_f = -K_fp u_p folds the free-free term into the coupling term
    const double split = 0.5 * uf.dot(sys.k_fp() * up) + 0.5 * up.dot(sys.k_pp() * up);
    EXPECT_NEAR(split, sol.energy, 1e-10 * sol.energy);
  }
}

TEST(SolveDegree, QuadraticInStroke) {
  const Mesh mesh(3, 4);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(random_fractions(mesh.element_count(), 2));
  sys.factor();
  const Vector up = sys.restrict_prescribed(prescribed_2d(Degree::rz, mesh).values);
  const double e1 = sys.solve_degree(up).energy;
  const double e3 = sys.solve_degree(3.0 * up).energy;
  EXPECT_NEAR(e3, 9.0 * e1, 1e-12 * e3);
}

TEST(SolveDegree, OneFactorizationManySolves) {
  const Mesh mesh(5, 5);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(25, 0.5));
  sys.factor();
  for (Degree d : kDegrees2d) sys.solve_degree(sys.restrict_prescribed(prescribed_2d(d, mesh).values));
  EXPECT_EQ(sys.stats().factorizations, 1);
  EXPECT_EQ(sys.stats().substitutions, 3);
  EXPECT_EQ(sys.stats().adjoint_substitutions, 0);
}

TEST(SolveDegree, RequiresFactor) {
  const Mesh mesh(2, 2);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  sys.assemble(std::vector<double>(4, 1.0));
  EXPECT_ANY_THROW(sys.solve_degree(Vector::Zero(Index(sys.prescribed_dofs().size()))));
}

TEST(SolveDegree, Hex3dMatchesDenseOracle) {
  const Mesh mesh(2, 2, 2);
  const auto ke = element_stiffness_3d(0.3);
  const auto p = interface_dofs(mesh);
  GlobalSystem sys(mesh, ke, p);
  const auto s = random_fractions(mesh.element_count(), 8);
  sys.assemble(s);
  sys.factor();
  for (Degree d : kDegrees3d) {
    const auto field = prescribed_3d(d, mesh);
    const double e = sys.solve_degree(sys.restrict_prescribed(field.values)).energy;
    const double oracle = condensed_energy_oracle(mesh, ke, s, p, field.values);
    EXPECT_NEAR(e, oracle, 1e-10 * oracle) << to_string(d);
  }
}

TEST(Oracle, ZeroAndMonotone) {
  const Mesh mesh(4, 4);
  const auto ke = element_stiffness_2d(0.3);
  const auto p = interface_dofs(mesh);
  const std::vector<double> solid(16, 1.0), half(16, 0.5);
  EXPECT_EQ(condensed_energy_oracle(mesh, ke, solid, p, Vector::Zero(mesh.dof_count())), 0.0);
  const auto field = prescribed_2d(Degree::tx, mesh);
  EXPECT_GE(condensed_energy_oracle(mesh, ke, solid, p, field.values),
            condensed_energy_oracle(mesh, ke, half, p, field.values));
}

TEST(Oracle, EnergyMonotoneInModulus) {
  const Mesh mesh(4, 3);
  GlobalSystem sys(mesh, element_stiffness_2d(0.3), interface_dofs(mesh));
  const auto b = random_fractions(mesh.element_count(), 31);
  auto a = b;
  const auto bump = random_fractions(mesh.element_count(), 32, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::min(1.0, a[i] + 0.5 * bump[i]);
  const Vector up = sys.restrict_prescribed(prescribed_2d(Degree::rz, mesh).values);
  sys.assemble(a);
  sys.factor();
  const double ea = sys.solve_degree(up).energy;
  sys.assemble(b);
  sys.factor();
  const double eb = sys.solve_degree(up).energy;
  EXPECT_GE(ea, eb - 1e-10 * ea);
}

TEST(Oracle, RefusesLargeMeshes) {
  const Mesh mesh(101, 100);
  const std::vector<double> s(std::size_t(mesh.element_count()), 1.0);
  EXPECT_THROW(condensed_energy_oracle(mesh, element_stiffness_2d(0.3), s, interface_dofs(mesh),
                                       Vector::Zero(mesh.dof_count())),
               std::length_error);
}
