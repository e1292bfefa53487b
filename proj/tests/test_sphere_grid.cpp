#include "doctest.h"

#include <numbers>

#include "widthflow/sphere_grid.hpp"

using namespace widthflow;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("grid measure normalization") {
  SphereGrid g = build_grid(24, 48);
  CHECK(std::abs(g.weights.sum() - 4.0 * kPi) < 1e-10);
  CHECK(g.weights.minCoeff() > 0.0);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    CHECK(std::abs(g.nodes.row(i).norm() - 1.0) < 1e-14);
}

TEST_CASE("grid kills linear functions") {
  SphereGrid g = build_grid(24, 48);
  Eigen::Vector3d first_moment = g.nodes.transpose() * g.weights;
  CHECK(first_moment.norm() < 1e-10);
}

TEST_CASE("second moment of u3") {
  SphereGrid g = build_grid(24, 48);
  Eigen::VectorXd v = g.nodes.col(2).array().square();
  CHECK(std::abs(integrate(g, v) - 4.0 * kPi / 3.0) < 1e-10);
}

TEST_CASE("frames are orthonormal and tangent") {
  SphereGrid g = build_grid(8, 16);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Vector3d u = g.nodes.row(i), e1 = g.frame1.row(i),
                    e2 = g.frame2.row(i);
    CHECK(std::abs(e1.dot(e2)) < 1e-12);
    CHECK(std::abs(e1.dot(u)) < 1e-12);
    CHECK(std::abs(e2.dot(u)) < 1e-12);
    CHECK(std::abs(e1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(e2.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("integrate: odd function vanishes, constants exact") {
  SphereGrid g = build_grid(24, 48);
  CHECK(std::abs(integrate(g, Eigen::VectorXd::Ones(g.size())) - 4.0 * kPi) <
        1e-10);
  Eigen::VectorXd u3 = g.nodes.col(2);
  CHECK(std::abs(integrate(g, u3)) < 1e-10);
}

TEST_CASE("integrate rejects length mismatch") {
  SphereGrid g = build_grid(8, 16);
  CHECK_THROWS(integrate(g, Eigen::VectorXd::Ones(3)));
}

TEST_CASE("sizing errors") {
  CHECK_THROWS(build_grid(1, 48));
  CHECK_THROWS(build_grid(24, 3));
}

TEST_CASE("determinism") {
  SphereGrid a = build_grid(16, 32), b = build_grid(16, 32);
  CHECK((a.nodes - b.nodes).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
}
