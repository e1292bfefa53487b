#pragma once

#include <string>
#include <vector>

#include "widthflow/width_body.hpp"

namespace widthflow {

struct MeasureAtom {
  Eigen::Vector3d u = Eigen::Vector3d::UnitZ();
  double mass = 0.0;
};

/// Finitely-atomic measure in the annihilator of linear functions:
/// sum m_j u_j = 0 (up to 1e-12 relative to the total variation).
struct DiscreteMeasure {
  std::vector<MeasureAtom> atoms;

  double tv() const;
  Eigen::Vector3d moment() const;  // sum m_j u_j
};

/// Validates unit vectors and the P-perp moment.
DiscreteMeasure make_measure(std::vector<MeasureAtom> atoms);

/// Seeded random P-perp measure with n_atoms atoms (n_atoms >= 4): random
/// unit atoms and masses, with the degree-1 moment projected out of the
/// mass vector.
DiscreteMeasure random_measure(int n_atoms, std::uint64_t seed);

/// Spherical-cap smoothing kernel psi^eps supported on s in [1-eps, 1],
/// profile exp(-1/((s-(1-eps))(1-s))) normalized so that
/// int_{S^2} psi(u.v) dsigma(u) = 2 pi int psi(s) ds = 1.
///
/// The profile is evaluated with the exponent shifted by its maximum
/// (attained at the cap midpoint) so nothing underflows for small eps, and
/// the 128-node Gauss-Legendre normalization rule is windowed to the
/// region where the bump is above underflow level: for eps below ~0.05 the
/// bump is effectively a Gaussian of width eps^2/(4 sqrt 2) in s, which a
/// plain rule over the full support cannot see.
struct CapKernel {
  double epsilon = 0.0;
  double normalization = 0.0;  // Z with psi = profile / Z
  double s_moment = 0.0;       // 2 pi int s psi(s) ds
  Eigen::VectorXd s_nodes;     // windowed Gauss-Legendre nodes in s
  Eigen::VectorXd s_weights;   // plain ds weights (no 2 pi factor)

  /// Unnormalized bump; exactly 0 outside (1-eps, 1).
  double profile(double s) const;
  /// Normalized kernel profile / Z.
  double psi(double s) const;
};

CapKernel cap_kernel(double epsilon);

/// 2 pi int psi(s) ds recomputed with a 512-node windowed rule, as an
/// independent check of the normalization (should be 1 to ~1e-9).
double kernel_normalization_check(const CapKernel& kernel);

struct MollifyResult {
  Eigen::VectorXd tilde_values;  // mu-tilde at the grid nodes
  Eigen::Vector3d a_eps;         // degree-1 correction
  Eigen::VectorXd values;        // mu^eps = mu-tilde - a_eps . u at nodes
  double mass = 0.0;             // int mu-tilde dsigma (zonal reduction)
  Eigen::Vector3d pperp_residual;  // int u mu^eps dsigma (zonal reduction)
};

/// Node values of the mollified measure plus its degree-1 correction.  All
/// integrals against psi use the exact zonal reduction (the kernel is far
/// too sharp for the 2D grid; see the CapKernel note).
MollifyResult mollify(const DiscreteMeasure& mu, const CapKernel& kernel,
                      const SphereGrid& grid);

/// (psi * f)(v) for the harmonic function with the given coefficients, by
/// the atom-frame product rule: windowed Gauss-Legendre in s = u.v times a
/// uniform circle rule (exact for the polynomial integrand).
double convolve_at(const CapKernel& kernel, const HarmonicBasis& basis,
                   const Eigen::VectorXd& coeffs, const Eigen::Vector3d& v);

/// |<mu^eps, g> - <mu, g>| for the body's g; bounded by
/// 4 sqrt(2 eps) tv(mu) in general, and for P-perp inputs already by the
/// centered-representative bound sqrt(2 eps) tv(mu).
double mollify_error(const Discretization& d, const DiscreteMeasure& mu,
                     const CapKernel& kernel, const WidthBody& body);

// JSON measure files: list of {x, y, z, mass}; atoms validated on load.
std::string measure_to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const std::string& text);

}  // namespace widthflow
