#include "widthflow/harmonics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace widthflow {

namespace {

HomogPoly zero_poly(int degree) {
  HomogPoly p;
  p.degree = degree;
  p.coef = Eigen::VectorXd::Zero(monomial_count(std::max(degree, 0)));
  return p;
}

// p * z
HomogPoly mul_z(const HomogPoly& p) {
  HomogPoly q = zero_poly(p.degree + 1);
  for (int i = 0; i <= p.degree; ++i)
    for (int j = 0; j <= p.degree - i; ++j)
      q.coef[monomial_index(q.degree, i, j)] +=
          p.coef[monomial_index(p.degree, i, j)];
  return q;
}

// p * (x^2 + y^2 + z^2)
HomogPoly mul_r2(const HomogPoly& p) {
  HomogPoly q = zero_poly(p.degree + 2);
  for (int i = 0; i <= p.degree; ++i)
    for (int j = 0; j <= p.degree - i; ++j) {
      const double c = p.coef[monomial_index(p.degree, i, j)];
      q.coef[monomial_index(q.degree, i + 2, j)] += c;
      q.coef[monomial_index(q.degree, i, j + 2)] += c;
      q.coef[monomial_index(q.degree, i, j)] += c;
    }
  return q;
}

HomogPoly lin_comb(double s1, const HomogPoly& p1, double s2,
                   const HomogPoly& p2) {
  HomogPoly q = p1;
  q.coef = s1 * p1.coef + s2 * p2.coef;
  return q;
}

// partial derivative; axis 0 = x, 1 = y, 2 = z
HomogPoly derivative(const HomogPoly& p, int axis) {
  HomogPoly q = zero_poly(p.degree - 1);
  if (p.degree == 0) {
    q.degree = 0;
    q.coef = Eigen::VectorXd::Zero(1);
    return q;
  }
  for (int i = 0; i <= p.degree; ++i)
    for (int j = 0; j <= p.degree - i; ++j) {
      const int k = p.degree - i - j;
      const double c = p.coef[monomial_index(p.degree, i, j)];
      if (c == 0.0) continue;
      switch (axis) {
        case 0:
          if (i > 0) q.coef[monomial_index(q.degree, i - 1, j)] += i * c;
          break;
        case 1:
          if (j > 0) q.coef[monomial_index(q.degree, i, j - 1)] += j * c;
          break;
        default:
          if (k > 0) q.coef[monomial_index(q.degree, i, j)] += k * c;
          break;
      }
    }
  return q;
}

double eval_poly(const HomogPoly& p, const Eigen::Vector3d& u) {
  // power tables
  double px[20], py[20], pz[20];
  px[0] = py[0] = pz[0] = 1.0;
  for (int t = 1; t <= p.degree; ++t) {
    px[t] = px[t - 1] * u.x();
    py[t] = py[t - 1] * u.y();
    pz[t] = pz[t - 1] * u.z();
  }
  double s = 0.0;
  for (int i = 0; i <= p.degree; ++i)
    for (int j = 0; j <= p.degree - i; ++j) {
      const double c = p.coef[monomial_index(p.degree, i, j)];
      if (c != 0.0) s += c * px[i] * py[j] * pz[p.degree - i - j];
    }
  return s;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
  return r;
}

}  // namespace

HarmonicBasis::HarmonicBasis(int L) : L_(L) {
  if (L < 1) throw std::invalid_argument("HarmonicBasis: L must be >= 1");
  const double pi = std::numbers::pi;
  const int nb = basis_count(L);
  p_.resize(nb);
  dp_.resize(nb);
  d2p_.resize(nb);

  // Unnormalized A_l^m = r^l P_l^m(z/r) cos(m phi),
  //              B_l^m = r^l P_l^m(z/r) sin(m phi)  (Condon-Shortley dropped).
  std::vector<std::vector<HomogPoly>> A(L + 1), B(L + 1);
  for (int l = 0; l <= L; ++l) {
    A[l].resize(l + 1);
    B[l].resize(l + 1);
  }
  for (int m = 0; m <= L; ++m) {
    // seed: (2m-1)!! * {Re, Im}((x + i y)^m)
    double dfact = 1.0;
    for (int t = 3; t <= 2 * m - 1; t += 2) dfact *= t;
    HomogPoly re = zero_poly(m), im = zero_poly(m);
    for (int t = 0; t <= m; ++t) {
      const double c = binomial(m, t) * dfact;
      const int idx = monomial_index(m, m - t, t);
      if (t % 4 == 0) re.coef[idx] += c;
      else if (t % 4 == 1) im.coef[idx] += c;
      else if (t % 4 == 2) re.coef[idx] -= c;
      else im.coef[idx] -= c;
    }
    A[m][m] = re;
    B[m][m] = im;
    if (m + 1 <= L) {
      A[m + 1][m] = lin_comb(2.0 * m + 1.0, mul_z(A[m][m]), 0.0,
                             zero_poly(m + 1));
      B[m + 1][m] = lin_comb(2.0 * m + 1.0, mul_z(B[m][m]), 0.0,
                             zero_poly(m + 1));
    }
    for (int l = m + 2; l <= L; ++l) {
      const double c1 = (2.0 * l - 1.0) / (l - m);
      const double c2 = -(l - 1.0 + m) / (l - m);
      A[l][m] = lin_comb(c1, mul_z(A[l - 1][m]), c2, mul_r2(A[l - 2][m]));
      B[l][m] = lin_comb(c1, mul_z(B[l - 1][m]), c2, mul_r2(B[l - 2][m]));
    }
  }

  for (int l = 0; l <= L; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int am = std::abs(m);
      double ratio = 1.0;  // (l-|m|)! / (l+|m|)!
      for (int t = l - am + 1; t <= l + am; ++t) ratio /= t;
      double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * pi) * ratio);
      if (m != 0) norm *= std::sqrt(2.0);
      const HomogPoly& base = (m >= 0) ? A[l][am] : B[l][am];
      HomogPoly y = base;
      y.coef *= norm;
      const int a = basis_index(l, m);
      p_[a] = y;
      for (int ax = 0; ax < 3; ++ax) dp_[a][ax] = derivative(y, ax);
      int t = 0;
      for (int ax = 0; ax < 3; ++ax)
        for (int bx = ax; bx < 3; ++bx)
          d2p_[a][t++] = derivative(dp_[a][ax], bx);
    }
  }
}

Eigen::VectorXd HarmonicBasis::values(const Eigen::Vector3d& u) const {
  Eigen::VectorXd v(size());
  for (int a = 0; a < size(); ++a) v[a] = eval_poly(p_[a], u);
  return v;
}

double HarmonicBasis::value(int a, const Eigen::Vector3d& u) const {
  return eval_poly(p_[a], u);
}

Eigen::Vector3d HarmonicBasis::euclidean_gradient(
    int a, const Eigen::Vector3d& u) const {
  return {eval_poly(dp_[a][0], u), eval_poly(dp_[a][1], u),
          eval_poly(dp_[a][2], u)};
}

Eigen::Matrix3d HarmonicBasis::euclidean_hessian(
    int a, const Eigen::Vector3d& u) const {
  Eigen::Matrix3d h;
  h(0, 0) = eval_poly(d2p_[a][0], u);
  h(0, 1) = h(1, 0) = eval_poly(d2p_[a][1], u);
  h(0, 2) = h(2, 0) = eval_poly(d2p_[a][2], u);
  h(1, 1) = eval_poly(d2p_[a][3], u);
  h(1, 2) = h(2, 1) = eval_poly(d2p_[a][4], u);
  h(2, 2) = eval_poly(d2p_[a][5], u);
  return h;
}

HarmonicTable harmonic_table(const SphereGrid& grid,
                             const HarmonicBasis& basis) {
  const int L = basis.degree_max();
  if (grid.exactness_degree < 2 * L + 4)
    throw std::invalid_argument(
        "harmonic_table: grid too coarse for requested degree");

  const Eigen::Index n = grid.size();
  const int nb = basis.size();
  HarmonicTable tab;
  tab.degree_max = L;
  tab.val.resize(n, nb);
  tab.g1.resize(n, nb);
  tab.g2.resize(n, nb);
  tab.h11.resize(n, nb);
  tab.h12.resize(n, nb);
  tab.h22.resize(n, nb);

  for (int a = 0; a < nb; ++a) {
    const int l = basis_degree(a);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d u = grid.nodes.row(i);
      const Eigen::Vector3d e1 = grid.frame1.row(i);
      const Eigen::Vector3d e2 = grid.frame2.row(i);
      const double y = basis.value(a, u);
      const Eigen::Vector3d g = basis.euclidean_gradient(a, u);
      const Eigen::Matrix3d h = basis.euclidean_hessian(a, u);
      tab.val(i, a) = y;
      tab.g1(i, a) = e1.dot(g);
      tab.g2(i, a) = e2.dot(g);
      tab.h11(i, a) = e1.dot(h * e1) - l * y;
      tab.h12(i, a) = e1.dot(h * e2);
      tab.h22(i, a) = e2.dot(h * e2) - l * y;
    }
  }
  return tab;
}

Discretization make_discretization(int n_theta, int n_phi, int L) {
  Discretization d{build_grid(n_theta, n_phi), HarmonicBasis(L), {}};
  d.table = harmonic_table(d.grid, d.basis);
  return d;
}

}  // namespace widthflow
