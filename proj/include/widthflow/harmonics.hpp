#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "widthflow/sphere_grid.hpp"

namespace widthflow {

/// Homogeneous polynomial in (x, y, z) stored over the monomial basis
/// x^i y^j z^(d-i-j).
struct HomogPoly {
  int degree = 0;
  Eigen::VectorXd coef;  // indexed by monomial_index(degree, i, j)
};

inline int monomial_count(int degree) {
  return (degree + 1) * (degree + 2) / 2;
}
inline int monomial_index(int degree, int i, int j) {
  // entries ordered by i, then j; k = degree - i - j implicit
  return i * (2 * degree + 3 - i) / 2 + j;
}

/// Flat basis index for real harmonics: a = l*(l+1) + m, l >= 0, |m| <= l.
inline int basis_index(int l, int m) { return l * (l + 1) + m; }
inline int basis_count(int L) { return (L + 1) * (L + 1); }
inline int basis_degree(int a) {
  return static_cast<int>(std::floor(std::sqrt(a + 0.5)));
}

/// Orthonormal real spherical harmonics up to degree L, represented as
/// solid harmonic polynomials together with their exact first and second
/// derivatives.  The restriction of p[a] to the unit sphere is Y_a with
/// \int Y_a Y_b dsigma = delta_ab.
class HarmonicBasis {
 public:
  explicit HarmonicBasis(int L);

  int degree_max() const { return L_; }
  int size() const { return basis_count(L_); }

  /// Values of all basis functions at a unit vector.
  Eigen::VectorXd values(const Eigen::Vector3d& u) const;

  /// Value, tangential gradient (in R^3, orthogonal to u), and frame data
  /// for a single basis function at a unit vector.
  double value(int a, const Eigen::Vector3d& u) const;
  Eigen::Vector3d euclidean_gradient(int a, const Eigen::Vector3d& u) const;
  Eigen::Matrix3d euclidean_hessian(int a, const Eigen::Vector3d& u) const;

  const HomogPoly& poly(int a) const { return p_[a]; }

 private:
  int L_;
  std::vector<HomogPoly> p_;               // solid harmonics
  std::vector<std::array<HomogPoly, 3>> dp_;   // gradients
  std::vector<std::array<HomogPoly, 6>> d2p_;  // xx, xy, xz, yy, yz, zz
};

/// Node samples of every basis function: values, frame components of the
/// tangential gradient, and the frame covariant Hessian
/// (nabla^2 Y)_{ab} = e_a . D^2 p e_b - l Y delta_ab.
struct HarmonicTable {
  int degree_max = 0;
  Eigen::MatrixXd val;  // nodes x basis
  Eigen::MatrixXd g1, g2;
  Eigen::MatrixXd h11, h12, h22;
};

/// Samples the basis on the grid.  Requires L >= 1 and grid exactness
/// degree >= 2L + 4 so that Gram and Hessian products integrate exactly.
HarmonicTable harmonic_table(const SphereGrid& grid,
                             const HarmonicBasis& basis);

/// Bundles a grid, a basis, and its node table; the working context for
/// every body and solver operation.
struct Discretization {
  SphereGrid grid;
  HarmonicBasis basis;
  HarmonicTable table;
};

Discretization make_discretization(int n_theta, int n_phi, int L);

}  // namespace widthflow
