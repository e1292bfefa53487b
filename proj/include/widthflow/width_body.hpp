#pragma once

#include <Eigen/Dense>
#include <string>

#include "widthflow/harmonics.hpp"

namespace widthflow {

/// A constant-width body of width 1, represented by the odd-degree harmonic
/// coefficients of g = h - 1/2.  Storing only odd degrees enforces
/// h(u) + h(-u) = 1 identically; canonical bodies carry a zero degree-1
/// block (the translation gauge).
struct WidthBody {
  Eigen::VectorXd coeffs;  // size (L+1)^2; even-degree entries are zero

  int degree_max() const {
    return basis_degree(static_cast<int>(coeffs.size()) - 1);
  }
};

/// Zeroes every even-degree entry (and optionally the degree-1 block).
Eigen::VectorXd project_odd(const Eigen::VectorXd& c, bool zero_l1);

WidthBody make_ball(int L);
WidthBody make_body(const Discretization& d, const Eigen::VectorXd& coeffs);

/// h at the grid nodes.
Eigen::VectorXd support_values(const Discretization& d, const WidthBody& body);
/// g = h - 1/2 at the grid nodes for an arbitrary coefficient vector.
Eigen::VectorXd node_values(const Discretization& d, const Eigen::VectorXd& c);

/// h(u) for |u| = 1 (checked to 1e-10).
double evaluate_support(const Discretization& d, const WidthBody& body,
                        const Eigen::Vector3d& u);

/// Boundary point x = grad h(u) + h(u) u.  Requires a convex body.
Eigen::Vector3d boundary_point(const Discretization& d, const WidthBody& body,
                               const Eigen::Vector3d& u);

/// The 2x2 frame matrix M(u_i) = nabla^2 h + h I at node i.
Eigen::Matrix2d frame_matrix(const Discretization& d,
                             const Eigen::VectorXd& coeffs, Eigen::Index i);

/// min over nodes of the smaller eigenvalue of M(u_i).
double convexity_margin(const Discretization& d, const Eigen::VectorXd& coeffs);
double convexity_margin(const Discretization& d, const WidthBody& body);

struct BallResult {
  double radius = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
};

/// Smallest enclosing ball via the minimax LP on g.
BallResult circumradius(const Discretization& d, const WidthBody& body);
/// Largest inscribed ball via the independent max-min LP on h.
BallResult inradius(const Discretization& d, const WidthBody& body);

/// Quadrature of h^2 - |grad h|^2 / 2.  Requires a convex body.
double surface_area(const Discretization& d, const WidthBody& body);
/// Same quantity through the curvature determinant.
double surface_area_det(const Discretization& d, const WidthBody& body);

struct VolumeReport {
  double v_energy = 0.0;    // pi/6 - E/2
  double v_blaschke = 0.0;  // sigma(dK)/2 - pi/3
  double v_det = 0.0;       // (1/3) int h det(nabla^2 h + h id)
  double max_discrepancy = 0.0;
};

/// All three volume formulas; throws if they disagree beyond 1e-5.
VolumeReport volume(const Discretization& d, const WidthBody& body);

/// max node |g1 - g2|; in quotient mode the translation minimax instead.
double hausdorff_distance(const Discretization& d, const WidthBody& b1,
                          const WidthBody& b2, bool quotient);

/// Scales coefficients toward the ball until the convexity margin reaches
/// target_margin; the largest feasible scale is found by bisection.
WidthBody shrink_to_feasible(const Discretization& d,
                             const Eigen::VectorXd& coeffs,
                             double target_margin);

/// Coefficients of the degree-L zonal approximation to the rotational
/// Reuleaux-triangle body: best sup-norm fit of the support function
/// (modulo translation) subject to both zonal curvature radii staying
/// nonnegative, solved as a linear program on a fine meridian grid.  Plain
/// L^2 projection is useless here: the curvature radius of the Reuleaux
/// body jumps between 0 and 1, so truncation overshoots (Gibbs) by an
/// L-independent amount and the shrink to feasibility moves the volume by
/// ~2e-2.  The constrained fit keeps the body feasible by construction.
Eigen::VectorXd zonal_reuleaux_coeffs(int L);

/// Min over a fine meridian scan of both zonal curvature radii
/// (h'' + h and cot(theta) h' + h) for a zonal coefficient vector.
double zonal_margin(const Eigen::VectorXd& coeffs, int n_scan);

/// Rotational Reuleaux-triangle body at the discretization's degree.
WidthBody make_zonal_reuleaux(const Discretization& d);

/// Seeded random member of the discrete feasible set (degrees 3..L).
WidthBody random_body(const Discretization& d, double amplitude,
                      std::uint64_t seed);

/// Support function of the width-1 Reuleaux triangle with symmetry axis z,
/// for a unit direction (d_rho, d_z) in the meridian plane.
double reuleaux2d_support(double d_rho, double d_z);
/// Membership test for the meridian cross-section (three-disk intersection).
bool reuleaux2d_contains(double rho, double z);

struct MonteCarloVolume {
  double volume = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// Monte-Carlo volume of the exact rotational Reuleaux body via the
/// three-disk membership oracle; independent of any support function.
MonteCarloVolume reuleaux_volume_mc(long samples, std::uint64_t seed);

// JSON body files: degree_max + (l, m, value) triples.
std::string body_to_json(const WidthBody& body, const std::string& metadata);
WidthBody body_from_json(const std::string& text);
void save_body(const WidthBody& body, const std::string& path,
               const std::string& metadata = "");
WidthBody load_body(const std::string& path);

}  // namespace widthflow
