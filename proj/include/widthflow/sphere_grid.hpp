#pragma once

#include <Eigen/Dense>

namespace widthflow {

/// Product quadrature grid on the unit sphere: Gauss-Legendre nodes in
/// cos(theta) times uniform nodes in phi, with a deterministic orthonormal
/// tangent frame at every node.  Exact for spherical polynomials up to
/// exactness_degree.
struct SphereGrid {
  Eigen::MatrixX3d nodes;    // unit vectors, one row per node
  Eigen::VectorXd weights;   // positive, sum to 4*pi
  Eigen::MatrixX3d frame1;   // e_theta
  Eigen::MatrixX3d frame2;   // e_phi
  int n_theta = 0;
  int n_phi = 0;
  int exactness_degree = 0;

  Eigen::Index size() const { return nodes.rows(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w);

/// Builds the product grid.  Requires n_theta >= 2 and n_phi >= 4.
SphereGrid build_grid(int n_theta, int n_phi);

/// Quadrature sum; values must have one entry per node.
double integrate(const SphereGrid& grid, const Eigen::VectorXd& values);

}  // namespace widthflow
