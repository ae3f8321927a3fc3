#include <gtest/gtest.h>

#include "flexure/degrees.hpp"
#include "flexure/errors.hpp"

using namespace flexure;

namespace {

Eigen::Vector2d at2(const PrescribedField& f, Index node) { return f.values.segment<2>(node * 2); }
Eigen::Vector3d at3(const PrescribedField& f, Index node) { return f.values.segment<3>(node * 3); }

} // namespace

TEST(Degrees, ParseAndPrint) {
  for (Degree d : kDegrees3d) EXPECT_EQ(parse_degree(to_string(d)), d);
  EXPECT_FALSE(parse_degree("tw").has_value());
  EXPECT_TRUE(valid_in_dim(Degree::rz, 2));
  EXPECT_FALSE(valid_in_dim(Degree::tz, 2));
  EXPECT_FALSE(valid_in_dim(Degree::rx, 2));
}

TEST(Prescribed2d, Translations) {
  const Mesh mesh(6, 4);
  const auto ty = prescribed_2d(Degree::ty, mesh);
  const auto tx = prescribed_2d(Degree::tx, mesh);
  for (Index n : mesh.interface_top()) {
    EXPECT_EQ(at2(ty, n), Eigen::Vector2d(0, 1));
    EXPECT_EQ(at2(tx, n), Eigen::Vector2d(1, 0));
  }
  for (Index n : mesh.interface_bottom()) {
    EXPECT_EQ(at2(ty, n), Eigen::Vector2d::Zero());
    EXPECT_EQ(at2(tx, n), Eigen::Vector2d::Zero());
  }
}

TEST(Prescribed2d, RotationProfile) {
  const Mesh mesh(6, 4);
  const auto rz = prescribed_2d(Degree::rz, mesh);
  const Index left = mesh.node_index(0, 4), mid = mesh.node_index(3, 4), right = mesh.node_index(6, 4);
  EXPECT_EQ(at2(rz, left), Eigen::Vector2d(1, 1));
  EXPECT_EQ(at2(rz, mid)[1], 0.0);
  EXPECT_EQ(at2(rz, right), Eigen::Vector2d(1, -1));
  // affine in x
  for (int ix = 0; ix <= 6; ++ix) EXPECT_NEAR(at2(rz, mesh.node_index(ix, 4))[1], 1.0 - 2.0 * ix / 6.0, 1e-15);
}

TEST(Prescribed2d, CenteredRotation) {
  const Mesh mesh(6, 4);
  const auto rz = prescribed_2d(Degree::rz, mesh, RotationConvention::centered);
  EXPECT_NEAR(at2(rz, mesh.node_index(0, 4))[0], 4.0 / 6.0, 1e-15);
  EXPECT_EQ(at2(rz, mesh.node_index(3, 4))[1], 0.0);
}

TEST(Prescribed2d, SupportedOnTopOnly) {
  const Mesh mesh(3, 3);
  const auto rz = prescribed_2d(Degree::rz, mesh);
  std::vector<bool> top(std::size_t(mesh.node_count()), false);
  for (Index n : mesh.interface_top()) top[std::size_t(n)] = true;
  for (Index n = 0; n < mesh.node_count(); ++n)
    if (!top[std::size_t(n)]) EXPECT_EQ(at2(rz, n), Eigen::Vector2d::Zero());
}

TEST(Prescribed2d, RejectsSpatialDegrees) {
  const Mesh mesh(3, 3);
  EXPECT_THROW(prescribed_2d(Degree::tz, mesh), std::invalid_argument);
  EXPECT_THROW(prescribed_2d(Degree::rx, mesh), std::invalid_argument);
}

TEST(Prescribed3d, Translation) {
  const Mesh mesh(2, 2, 2);
  const auto tz = prescribed_3d(Degree::tz, mesh);
  for (Index n : mesh.interface_top()) EXPECT_EQ(at3(tz, n), Eigen::Vector3d(0, 0, 1));
  for (Index n : mesh.interface_bottom()) EXPECT_EQ(at3(tz, n), Eigen::Vector3d::Zero());
}

TEST(Prescribed3d, RotationAxisNodeStays) {
  const Mesh mesh(2, 2, 2);
  const auto rz = prescribed_3d(Degree::rz, mesh);
  const Index axis = mesh.node_index(1, 1, 2);
  EXPECT_EQ(at3(rz, axis)[0], 0.0);
  EXPECT_EQ(at3(rz, axis)[1], 0.0);
}

TEST(Prescribed3d, RotationCrossProduct) {
  // centroid (1, 1.5, 1); node (0, 3, 2): arm = (-1, 1.5, 1)
  // x_hat cross arm = (0, -1, 1.5)
  const Mesh mesh(2, 3, 2);
  const auto rx = prescribed_3d(Degree::rx, mesh);
  const Index n = mesh.node_index(0, 3, 2);
  EXPECT_EQ(at3(rx, n), Eigen::Vector3d(0, -1, 1.5));
  // y_hat cross arm = (1, 0, 1)
  EXPECT_EQ(at3(prescribed_3d(Degree::ry, mesh), n), Eigen::Vector3d(1, 0, 1));
}

TEST(Prescribed3d, RigidToFirstOrder) {
  // a linearized rotation has skew gradient, so edge lengths are unchanged to first order
  const Mesh mesh(3, 2, 2);
  for (Degree d : {Degree::rx, Degree::ry, Degree::rz}) {
    const auto f = prescribed_3d(d, mesh);
    const auto& top = mesh.interface_top();
    for (std::size_t i = 0; i + 1 < top.size(); ++i) {
      const auto pa = mesh.node_position(top[i]), pb = mesh.node_position(top[i + 1]);
      const Eigen::Vector3d r(pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]);
      EXPECT_NEAR(r.dot(at3(f, top[i + 1]) - at3(f, top[i])), 0.0, 1e-14);
    }
  }
}

TEST(ValidateDegrees, Valid) {
  const auto s = validate_degree_sets({"ty"}, {"tx"});
  ASSERT_EQ(s.doc.size(), 1u);
  EXPECT_EQ(s.doc[0], Degree::ty);
  EXPECT_EQ(s.all(), (std::vector<Degree>{Degree::ty, Degree::tx}));
  EXPECT_NO_THROW(validate_degree_sets({"tx", "ty", "tz", "rz"}, {"rx", "ry"}, 3));
}

TEST(ValidateDegrees, Errors) {
  auto message = [](const std::vector<std::string>& doc, const std::vector<std::string>& dof, int dim = 2) {
    try {
      validate_degree_sets(doc, dof, dim);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({"tx"}, {"tx"}).find("tx"), std::string::npos);
  EXPECT_NE(message({}, {"tx"}).find("doc"), std::string::npos);
  EXPECT_NE(message({"tx"}, {}).find("dof"), std::string::npos);
  EXPECT_NE(message({"tx", "tx"}, {"ty"}).find("duplicate"), std::string::npos);
  EXPECT_NE(message({"qq"}, {"ty"}).find("qq"), std::string::npos);
  EXPECT_NE(message({"tz"}, {"ty"}).find("tz"), std::string::npos);
}
