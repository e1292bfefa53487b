#include <cmath>
#include <random>

#include "doctest.h"
#include "widthflow/mollifier.hpp"

using namespace widthflow;

namespace {
const Discretization& disc() {
  static Discretization d = make_discretization(24, 48, 9);
  return d;
}

DiscreteMeasure four_poles() {
  return make_measure({{Eigen::Vector3d::UnitZ(), 1.0},
                       {-Eigen::Vector3d::UnitZ(), 1.0},
                       {Eigen::Vector3d::UnitX(), -1.0},
                       {-Eigen::Vector3d::UnitX(), -1.0}});
}

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

TEST_CASE("cap kernel: normalization, support, positivity") {
  for (double eps : {0.3, 0.2, 0.1, 0.05, 0.01}) {
    CapKernel k = cap_kernel(eps);
    CHECK(std::abs(kernel_normalization_check(k) - 1.0) < 1e-9);
    CHECK(k.profile(1.0 - eps) == 0.0);
    CHECK(k.profile(1.0) == 0.0);
    CHECK(k.profile(1.0 - eps - 0.01) == 0.0);
    CHECK(k.profile(1.0 - eps / 2.0) > 0.0);  // midpoint, scaled to 1
    CHECK(k.profile(1.0 - eps / 2.0) == 1.0);
    // first moment sits inside the cap
    CHECK(k.s_moment > 1.0 - eps);
    CHECK(k.s_moment < 1.0);
  }
  for (double eps : {0.3, 0.2, 0.1})
    for (double sig : {0.2, 0.5, 0.8}) {
      CapKernel k = cap_kernel(eps);
      CHECK(k.profile(1.0 - eps + eps * sig) > 0.0);
    }
  CHECK_THROWS(cap_kernel(0.0));
  CHECK_THROWS(cap_kernel(1.0));
}

TEST_CASE("measures: validation and random P-perp members") {
  CHECK_THROWS(make_measure({{Eigen::Vector3d(0, 0, 2), 1.0}}));
  CHECK_THROWS(make_measure({{Eigen::Vector3d::UnitZ(), 1.0}}));  // moment
  DiscreteMeasure mu = four_poles();
  CHECK(mu.tv() == 4.0);
  CHECK(mu.moment().norm() < 1e-15);
  for (auto seed : {1ull, 2ull, 3ull}) {
    DiscreteMeasure r = random_measure(8, seed);
    CHECK(r.moment().norm() < 1e-12 * std::max(1.0, r.tv()));
    CHECK(r.tv() > 0.0);
  }
}

TEST_CASE("cap geometry: u.v >= 1-eps implies |u-v| <= sqrt(2 eps)") {
  std::mt19937_64 rng(5);
  for (double eps : {0.2, 0.05}) {
    int inside = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      const double z = 2.0 * uniform(rng) - 1.0;
      const double phi = 2.0 * M_PI * uniform(rng);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::Vector3d u(r * std::cos(phi), r * std::sin(phi), z);
      Eigen::Vector3d v = Eigen::Vector3d::UnitZ();
      if (u.dot(v) >= 1.0 - eps) {
        ++inside;
        CHECK((u - v).norm() <= std::sqrt(2.0 * eps) + 1e-12);
      }
    }
    CHECK(inside > 0);
  }
}

TEST_CASE("mollify: empty, corrections, mass, P-perp") {
  const auto& d = disc();
  CapKernel k = cap_kernel(0.2);
  MollifyResult empty = mollify(DiscreteMeasure{}, k, d.grid);
  CHECK(empty.tilde_values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(empty.a_eps.norm() == 0.0);
  CHECK(empty.mass == 0.0);

  DiscreteMeasure mu = four_poles();
  for (double eps : {0.2, 0.05}) {
    CapKernel ke = cap_kernel(eps);
    MollifyResult res = mollify(mu, ke, d.grid);
    // appendix estimate 4 pi |a_eps| <= 3 sqrt(2 eps) ||mu||
    CHECK(4.0 * M_PI * res.a_eps.norm() <=
          3.0 * std::sqrt(2.0 * eps) * mu.tv() + 1e-12);
    CHECK(std::abs(res.mass - 0.0) < 1e-8);  // masses sum to zero here
    CHECK(res.pperp_residual.norm() < 1e-9);
    // node values: mu-tilde is even under the antipodal map for this mu
    CHECK((res.values - res.tilde_values).cwiseAbs().maxCoeff() < 1e-12);
  }
  // non-P-perp input rejected
  DiscreteMeasure bad;
  bad.atoms = {{Eigen::Vector3d::UnitZ(), 1.0}};
  CHECK_THROWS(mollify(bad, k, d.grid));
}

TEST_CASE("convolution against a brute-force grid oracle") {
  const auto& d = disc();
  CapKernel k = cap_kernel(0.3);
  WidthBody b = random_body(d, 0.05, 17);
  const SphereGrid fine = build_grid(512, 1024);
  for (const Eigen::Vector3d v :
       {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0),
        Eigen::Vector3d(0.6, 0.0, 0.8)}) {
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < fine.size(); ++i) {
      const double s = fine.nodes.row(i).dot(v);
      if (s > 1.0 - k.epsilon)
        oracle += fine.weights[i] * k.psi(s) *
                  d.basis.values(fine.nodes.row(i)).dot(b.coeffs);
    }
    const double fast = convolve_at(k, d.basis, b.coeffs, v);
    CHECK(std::abs(fast - oracle) < 1e-8);
  }
  // psi * 1 = 1 and psi * (w.u) = s_moment * (w.v)
  Eigen::VectorXd ones = Eigen::VectorXd::Zero(d.basis.size());
  ones[0] = std::sqrt(4.0 * M_PI);  // Y_00 = 1/sqrt(4 pi)
  CHECK(std::abs(convolve_at(k, d.basis, ones, Eigen::Vector3d::UnitZ()) -
                 1.0) < 1e-10);
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(d.basis.size());
  lin[basis_index(1, 0)] = 1.0;
  const double direct = d.basis.values(Eigen::Vector3d::UnitZ()).dot(lin);
  CHECK(std::abs(convolve_at(k, d.basis, lin, Eigen::Vector3d::UnitZ()) -
                 k.s_moment * direct) < 1e-10);
}

TEST_CASE("mollify_error: bounds and refinement") {
  const auto& d = disc();
  DiscreteMeasure empty;
  CHECK(mollify_error(d, empty, cap_kernel(0.1), random_body(d, 0.05, 1)) ==
        0.0);

  // seeded (measure, body) pairs at eps = 0.1
  for (unsigned long long seed = 0; seed < 100; ++seed) {
    DiscreteMeasure mu = random_measure(6, 1000 + seed);
    WidthBody b = random_body(d, 0.05, 2000 + seed);
    const double err = mollify_error(d, mu, cap_kernel(0.1), b);
    CHECK(err <= 4.0 * std::sqrt(2.0 * 0.1) * mu.tv() + 1e-7);
    // intermediate (centered-representative) bound; for P-perp measures
    // the centering terms drop out so it applies to the same value
    CHECK(err <= std::sqrt(2.0 * 0.1) * mu.tv() + 1e-7);
  }

  // eps refinement: bound always holds and the observed error vanishes
  DiscreteMeasure mu = four_poles();
  WidthBody b = random_body(d, 0.05, 77);
  double first = -1.0, last = -1.0;
  for (double eps : {0.2, 0.1, 0.05, 0.01}) {
    const double err = mollify_error(d, mu, cap_kernel(eps), b);
    CHECK(err <= 4.0 * std::sqrt(2.0 * eps) * mu.tv() + 1e-7);
    if (first < 0.0) first = err;
    last = err;
  }
  CHECK(last < first);
  CHECK(last < 0.05 * mu.tv());
}

TEST_CASE("measure json round trip") {
  DiscreteMeasure mu = random_measure(7, 42);
  DiscreteMeasure back = measure_from_json(measure_to_json(mu));
  REQUIRE(back.atoms.size() == mu.atoms.size());
  for (size_t j = 0; j < mu.atoms.size(); ++j) {
    CHECK(back.atoms[j].u == mu.atoms[j].u);
    CHECK(back.atoms[j].mass == mu.atoms[j].mass);
  }
  CHECK_THROWS(measure_from_json("{}"));
  // a file whose atoms are off the sphere is rejected
  CHECK_THROWS(measure_from_json(
      "{\"atoms\": [{\"x\": 0, \"y\": 0, \"z\": 2, \"mass\": 1}]}"));
}
