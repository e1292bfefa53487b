#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "widthflow/convex_program.hpp"
#include "widthflow/mesh.hpp"
#include "widthflow/width_body.hpp"

using namespace widthflow;

namespace {
constexpr double kPi = std::numbers::pi;

const Discretization& disc() {
  static Discretization d = make_discretization(24, 48, 9);
  return d;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  auto unif = [&] { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };
  Eigen::Vector3d v;
  do {
    v << unif(), unif(), unif();
  } while (v.norm() < 1e-3);
  return v.normalized();
}
}  // namespace

TEST_CASE("ball geometry is exact") {
  const auto& d = disc();
  WidthBody ball = make_ball(9);
  CHECK(std::abs(evaluate_support(d, ball, Eigen::Vector3d(0, 0, 1)) - 0.5) <
        1e-15);
  CHECK(std::abs(convexity_margin(d, ball) - 0.5) < 1e-12);
  BallResult R = circumradius(d, ball), r = inradius(d, ball);
  CHECK(std::abs(R.radius - 0.5) < 1e-10);
  CHECK(std::abs(r.radius - 0.5) < 1e-10);
  CHECK(R.center.norm() < 1e-9);
  CHECK(r.center.norm() < 1e-9);
  CHECK(std::abs(surface_area(d, ball) - kPi) < 1e-10);
  CHECK(std::abs(surface_area_det(d, ball) - kPi) < 1e-10);
  VolumeReport v = volume(d, ball);
  CHECK(std::abs(v.v_energy - kPi / 6.0) < 1e-10);
  CHECK(v.max_discrepancy < 1e-10);
  CHECK((boundary_point(d, ball, Eigen::Vector3d(1, 0, 0)) -
         Eigen::Vector3d(0.5, 0, 0))
            .norm() < 1e-12);
}

TEST_CASE("width identity h(u) + h(-u) = 1") {
  const auto& d = disc();
  std::mt19937_64 rng(2);
  WidthBody b = random_body(d, 0.05, 42);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector3d u = random_unit(rng);
    CHECK(std::abs(evaluate_support(d, b, u) + evaluate_support(d, b, -u) -
                   1.0) < 1e-12);
  }
}

TEST_CASE("width map: boundary_point(u) - boundary_point(-u) = u") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 7);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::Vector3d u = random_unit(rng);
    Eigen::Vector3d diff =
        boundary_point(d, b, u) - boundary_point(d, b, -u);
    CHECK((diff - u).norm() < 1e-10);
  }
}

TEST_CASE("boundary points respect the support inequality") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 11);
  Eigen::VectorXd h = support_values(d, b);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d x = boundary_point(d, b, random_unit(rng));
    double worst = -1e300;
    for (Eigen::Index i = 0; i < d.grid.size(); ++i)
      worst = std::max(worst, x.dot(Eigen::Vector3d(d.grid.nodes.row(i))) -
                                  h[i]);
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("boundary map Lipschitz bound 1 + pi/2") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 21);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::Vector3d u = random_unit(rng), v = random_unit(rng);
    double lhs = (boundary_point(d, b, u) - boundary_point(d, b, v)).norm();
    CHECK(lhs <= (1.0 + kPi / 2.0) * (u - v).norm() + 1e-8);
  }
}

TEST_CASE("convexity margin matches a brute-force eigenvalue scan") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 31);
  double brute = 1e300;
  for (Eigen::Index i = 0; i < d.grid.size(); ++i) {
    Eigen::Matrix2d m = frame_matrix(d, b.coeffs, i);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    brute = std::min(brute, es.eigenvalues().minCoeff());
  }
  CHECK(std::abs(convexity_margin(d, b) - brute) < 1e-12);
}

TEST_CASE("tangential Hessian of the extension stays in [0, 1]") {
  // W^{2,inf} bound: 0 <= w . D^2 H w <= 1 on |u| = 1
  const auto& d = disc();
  for (auto seed : {7ull, 31ull}) {
    WidthBody b = random_body(d, 0.05, seed);
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index i = 0; i < d.grid.size(); ++i) {
      Eigen::Matrix2d m = frame_matrix(d, b.coeffs, i);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
      lo = std::min(lo, es.eigenvalues().minCoeff());
      hi = std::max(hi, es.eigenvalues().maxCoeff());
    }
    CHECK(lo >= -1e-9);
    CHECK(hi <= 1.0 + 1e-6);
  }
}

TEST_CASE("shrunk body margin obeys the affine bound") {
  const auto& d = disc();
  // large zonal coefficient: infeasible
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_count(9));
  c[basis_index(3, 0)] = 0.2;
  const double m0 = convexity_margin(d, c);
  CHECK(m0 < 0.0);
  WidthBody shr = shrink_to_feasible(d, c, 1e-6);
  const double lambda = shr.coeffs[basis_index(3, 0)] / 0.2;
  const double m = convexity_margin(d, shr);
  CHECK(m >= 1e-6 - 1e-8);
  CHECK(m >= lambda * m0 + (1.0 - lambda) * 0.5 - 1e-12);
  // feasible input untouched
  WidthBody b = random_body(d, 0.05, 5);
  WidthBody again = shrink_to_feasible(d, b.coeffs, 1e-7);
  CHECK((again.coeffs - b.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("circumradius: translation invariance and Jung bound") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 17);
  BallResult R0 = circumradius(d, b);
  // translate by setting the degree-1 block: a.u = sum c_1m Y_1m
  const double n1 = std::sqrt(3.0 / (4.0 * kPi));
  Eigen::Vector3d a(0.02, -0.01, 0.03);
  WidthBody t = b;
  t.coeffs[basis_index(1, 1)] += a.x() / n1;
  t.coeffs[basis_index(1, -1)] += a.y() / n1;
  t.coeffs[basis_index(1, 0)] += a.z() / n1;
  BallResult R1 = circumradius(d, t);
  CHECK(std::abs(R1.radius - R0.radius) < 1e-10);
  CHECK((R1.center - R0.center - a).norm() < 1e-8);
  for (auto seed : {1ull, 2ull, 3ull})
    CHECK(circumradius(d, random_body(d, 0.05, seed)).radius <=
          std::sqrt(3.0 / 8.0) + 1e-6);
}

TEST_CASE("inradius: r + R = 1 and concentric centers") {
  const auto& d = disc();
  for (auto seed : {4ull, 8ull, 15ull}) {
    WidthBody b = random_body(d, 0.05, seed);
    BallResult R = circumradius(d, b), r = inradius(d, b);
    CHECK(std::abs(R.radius + r.radius - 1.0) < 1e-8);
    CHECK((R.center - r.center).norm() < 1e-7);
  }
}

TEST_CASE("volume: triple consistency and the ball maximum") {
  const auto& d = disc();
  for (auto seed : {6ull, 16ull, 26ull}) {
    WidthBody b = random_body(d, 0.05, seed);
    VolumeReport v = volume(d, b);
    CHECK(std::abs(v.v_energy - v.v_blaschke) < 1e-8);
    CHECK(std::abs(v.v_energy - v.v_det) < 1e-5);
    CHECK(v.v_energy <= kPi / 6.0 + 1e-10);
    CHECK(std::abs(surface_area(d, b) - surface_area_det(d, b)) < 1e-6);
  }
}

TEST_CASE("hausdorff distance") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 19);
  CHECK(hausdorff_distance(d, b, b, false) == 0.0);
  // centered body vs ball in quotient mode equals R - 1/2
  WidthBody ball = make_ball(9);
  const double dh = hausdorff_distance(d, b, ball, true);
  CHECK(std::abs(dh - (circumradius(d, b).radius - 0.5)) < 1e-8);
  // translated copy is at quotient distance zero
  const double n1 = std::sqrt(3.0 / (4.0 * kPi));
  WidthBody t = b;
  t.coeffs[basis_index(1, 0)] += 0.04 / n1;
  CHECK(hausdorff_distance(d, b, t, true) < 1e-8);
  CHECK(hausdorff_distance(d, b, t, false) > 1e-3);
}

TEST_CASE("random bodies: determinism and the energy bound") {
  const auto& d = disc();
  WidthBody a = random_body(d, 0.05, 123), b = random_body(d, 0.05, 123);
  CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() == 0.0);
  for (auto seed : {9ull, 10ull, 11ull}) {
    WidthBody w = random_body(d, 0.05, seed);
    CHECK(convexity_margin(d, w) >= 1e-6 - 1e-10);
    CHECK(energy(w.coeffs) <= kPi / 3.0 + 1e-8);
  }
}

TEST_CASE("support Lipschitz bounds for the centered representative") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 29);
  Eigen::Vector3d a = circumradius(d, b).center;
  Eigen::VectorXd h = support_values(d, b);
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> node(0,
                                          static_cast<int>(d.grid.size()) - 1);
  const double kappa = std::sqrt(3.0 / 8.0) - 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const int i = node(rng), j = node(rng);
    Eigen::Vector3d u = d.grid.nodes.row(i), v = d.grid.nodes.row(j);
    CHECK(std::abs(h[i] - h[j] - a.dot(u - v)) <= (u - v).norm() + 1e-8);
    CHECK(std::abs(h[i] - 0.5 - a.dot(u)) <= kappa + 1e-6);
  }
}

TEST_CASE("2d reuleaux support and membership agree") {
  // boundary points of the sampled support set must be members, and support
  // must dominate every member direction product
  std::mt19937_64 rng(3);
  auto unif = [&] { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };
  for (int trial = 0; trial < 500; ++trial) {
    const double rho = 0.6 * unif(), z = 0.7 * unif();
    if (!reuleaux2d_contains(rho, z)) continue;
    const double ang = kPi * unif();
    CHECK(rho * std::cos(ang) + z * std::sin(ang) <=
          reuleaux2d_support(std::cos(ang), std::sin(ang)) + 1e-9);
  }
  // the three vertices are extreme points
  const double r3 = std::sqrt(3.0);
  CHECK(std::abs(reuleaux2d_support(0.0, 1.0) - 1.0 / r3) < 1e-6);
  // downward support reaches the bottom of the arc centered at the apex
  CHECK(std::abs(reuleaux2d_support(0.0, -1.0) - (1.0 - 1.0 / r3)) < 1e-6);
}

TEST_CASE("zonal reuleaux body") {
  const auto& d = disc();
  WidthBody z = make_zonal_reuleaux(d);
  // purely zonal odd coefficients
  for (int a = 0; a < z.coeffs.size(); ++a) {
    const int l = basis_degree(a);
    if (z.coeffs[a] != 0.0) {
      CHECK(l % 2 == 1);
      CHECK(a == basis_index(l, 0));
    }
  }
  const double R = circumradius(d, z).radius;
  CHECK(R > 0.5);
  CHECK(R <= std::sqrt(3.0 / 8.0) + 1e-6);
  CHECK(convexity_margin(d, z) >= 1e-6 - 1e-9);
  CHECK(volume(d, z).v_energy < kPi / 6.0);
}

TEST_CASE("high-degree zonal reuleaux volume matches the MC oracle") {
  Eigen::VectorXd c = zonal_reuleaux_coeffs(81);
  CHECK(zonal_margin(c, 100000) >= 0.0);
  const double v = kPi / 6.0 - 0.5 * energy(c);
  MonteCarloVolume mc = reuleaux_volume_mc(1000000, 2024);
  CHECK(v < kPi / 6.0);
  CHECK(std::abs(v - mc.volume) < 3.0 * mc.std_error);
}

TEST_CASE("monte carlo volume against meridian quadrature") {
  // independent oracle: V = pi * int rho(z)^2 dz with rho from the exact
  // three-disk cross-section, by fine midpoint quadrature
  const double r3 = std::sqrt(3.0);
  auto rho_max = [&](double z) {
    const double cz[3] = {1.0 / r3, -0.5 / r3, -0.5 / r3};
    const double cx[3] = {0.0, -0.5, 0.5};
    double r = 1e300;
    for (int i = 0; i < 3; ++i) {
      const double dz = z - cz[i];
      if (std::abs(dz) > 1.0) return 0.0;
      r = std::min(r, cx[i] + std::sqrt(1.0 - dz * dz));
    }
    return std::max(0.0, r);
  };
  const double zlo = 1.0 / r3 - 1.0, zhi = 1.0 / r3;
  const int n = 200000;
  double vol = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = zlo + (zhi - zlo) * (i + 0.5) / n;
    const double r = rho_max(z);
    vol += r * r;
  }
  vol *= kPi * (zhi - zlo) / n;
  MonteCarloVolume mc = reuleaux_volume_mc(1000000, 99);
  CHECK(std::abs(mc.volume - vol) < 3.0 * mc.std_error);
  CHECK(mc.std_error < 1e-3);
  // determinism
  MonteCarloVolume mc2 = reuleaux_volume_mc(1000000, 99);
  CHECK(mc.volume == mc2.volume);
}

TEST_CASE("json round trip") {
  const auto& d = disc();
  WidthBody b = random_body(d, 0.05, 77);
  WidthBody back = body_from_json(body_to_json(b, "{\"seed\": 77}"));
  CHECK((back.coeffs - b.coeffs).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(body_from_json("{\"degree_max\": 3, \"coefficients\": "
                              "[[2, 0, 0.1]]}"));
  WidthBody ball = make_ball(9);
  WidthBody ball2 = body_from_json(body_to_json(ball, ""));
  CHECK(ball2.coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mesh export") {
  const auto& d = disc();
  const std::string path = "test_mesh_tmp.obj";
  export_mesh(d, make_ball(9), 6, path);
  std::ifstream is(path);
  REQUIRE(is.good());
  std::vector<Eigen::Vector3d> verts;
  int faces = 0;
  std::string tag;
  while (is >> tag) {
    if (tag == "v") {
      Eigen::Vector3d v;
      is >> v.x() >> v.y() >> v.z();
      verts.push_back(v);
    } else if (tag == "f") {
      int a, b, c;
      is >> a >> b >> c;
      ++faces;
    }
  }
  CHECK(static_cast<int>(verts.size()) == 6 * 12 + 2);
  CHECK(faces > 0);
  for (const auto& v : verts) CHECK(std::abs(v.norm() - 0.5) < 1e-10);
  std::remove(path.c_str());

  // diameter of a width-1 body never exceeds 1
  export_mesh(d, random_body(d, 0.05, 3), 6, path);
  std::ifstream is2(path);
  verts.clear();
  while (is2 >> tag) {
    if (tag == "v") {
      Eigen::Vector3d v;
      is2 >> v.x() >> v.y() >> v.z();
      verts.push_back(v);
    } else {
      std::string rest;
      std::getline(is2, rest);
    }
  }
  double diam = 0.0;
  for (size_t i = 0; i < verts.size(); ++i)
    for (size_t j = i + 1; j < verts.size(); ++j)
      diam = std::max(diam, (verts[i] - verts[j]).norm());
  CHECK(diam <= 1.0 + 1e-6);
  std::remove(path.c_str());
}
