#include "widthflow/sphere_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace widthflow {

void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  x.resize(n);
  w.resize(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, refined by Newton on P_n.
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) {
        // one more corrected step for full precision
        p0 = 1.0;
        p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        t -= p1 / dp;
        break;
      }
    }
    x[n - 1 - i] = t;
    w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

SphereGrid build_grid(int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 4)
    throw std::invalid_argument(
        "build_grid: need n_theta >= 2 and n_phi >= 4");

  const double pi = std::numbers::pi;
  Eigen::VectorXd ct, wt;
  gauss_legendre(n_theta, ct, wt);

  SphereGrid grid;
  grid.n_theta = n_theta;
  grid.n_phi = n_phi;
  grid.exactness_degree = std::min(2 * n_theta - 1, n_phi - 1);

  const Eigen::Index n = static_cast<Eigen::Index>(n_theta) * n_phi;
  grid.nodes.resize(n, 3);
  grid.weights.resize(n);
  grid.frame1.resize(n, 3);
  grid.frame2.resize(n, 3);

  const double wphi = 2.0 * pi / n_phi;
  Eigen::Index idx = 0;
  for (int i = 0; i < n_theta; ++i) {
    const double c = ct[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j, ++idx) {
      const double phi = 2.0 * pi * j / n_phi;
      const double cp = std::cos(phi), sp = std::sin(phi);
      grid.nodes.row(idx) << s * cp, s * sp, c;
      grid.weights[idx] = wt[i] * wphi;
      grid.frame1.row(idx) << c * cp, c * sp, -s;  // e_theta
      grid.frame2.row(idx) << -sp, cp, 0.0;        // e_phi
    }
  }
  return grid;
}

double integrate(const SphereGrid& grid, const Eigen::VectorXd& values) {
  if (values.size() != grid.weights.size())
    throw std::invalid_argument("integrate: length mismatch");
  return grid.weights.dot(values);
}

}  // namespace widthflow
