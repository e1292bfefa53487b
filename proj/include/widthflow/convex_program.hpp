#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "widthflow/width_body.hpp"

namespace widthflow {

/// Element of the dual space P-perp in harmonic coordinates: the pairing is
/// <xi, g> = sum_a comps[a] c_a.  The degree-1 block is identically zero
/// (the functional annihilates linear functions).
struct DualFunctional {
  Eigen::VectorXd comps;  // size (L+1)^2, degree-1 block zero

  int degree_max() const {
    return basis_degree(static_cast<int>(comps.size()) - 1);
  }
};

DualFunctional make_dual(const Eigen::VectorXd& comps);
DualFunctional zero_dual(int L);

inline double pair(const DualFunctional& xi, const Eigen::VectorXd& c) {
  return xi.comps.dot(c);
}

/// E(g) = int (|grad g|^2 / 2 - g^2) = sum (l(l+1)/2 - 1) c_a^2.
double energy(const Eigen::VectorXd& c);
/// Gradient component (l(l+1) - 2) c_a.
Eigen::VectorXd energy_gradient(const Eigen::VectorXd& c);

struct QuotientNorm {
  double value = 0.0;
  Eigen::Vector3d witness_a = Eigen::Vector3d::Zero();  // |g + a.u| <= value
  Eigen::VectorXd node_multipliers;  // signed, sum |lambda| = 1, sum lambda u = 0
};

/// ||g|| = min_a max_i |g(u_i) + a.u_i| with LP multipliers.
QuotientNorm quotient_norm(const Discretization& d, const Eigen::VectorXd& c);

/// ||xi||_* = max <xi, c> over |g_c(u_i) + a.u_i| <= 1 (degree-1 block of c
/// folded into a).  Throws if the degree-1 block of xi is nonzero.
double dual_norm(const Discretization& d, const DualFunctional& xi);

/// Element of J(g): xi = ||g|| sum_i lambda_i eval(u_i), from the quotient
/// norm multipliers; asserts |<xi,g> - ||g||^2| <= 1e-7 and
/// |dual_norm(xi) - ||g||| <= 1e-6, retrying once with a perturbed LP.
DualFunctional duality_select(const Discretization& d,
                              const Eigen::VectorXd& c);

/// Basis indices of degree 3, 5, ..., L (the coordinates of the discrete C).
std::vector<int> odd_indices(int L);

/// Jung gap sqrt(3/8) - 1/2, the box bound on node values in the discrete C.
double feasible_box_bound();

/// Scales c toward zero until every node constraint of the discrete C
/// (convexity cone and box) holds; returns the scaled vector.
Eigen::VectorXd round_to_feasible(const Discretization& d,
                                  const Eigen::VectorXd& c);

/// chi*_C(xi) = max <xi, g> over the discrete C.  Solved by the first-order
/// conic method; the returned value is evaluated at a feasible rounding, so
/// it is a certified lower bound on the discrete supremum.
double chi_star(const Discretization& d, const DualFunctional& xi);

struct EStarResult {
  double value = 0.0;        // <zeta, g*> - E(g*), g* feasible
  Eigen::VectorXd argmax;    // full coefficient vector of g*
  double kkt_residual = 0.0;
  int iterations = 0;
  Eigen::VectorXd solver_x, solver_y;  // warm-start state
};

/// E*(zeta) = sup { <zeta, g> - E(g) : g in C }, with the maximizer.
EStarResult e_star(const Discretization& d, const DualFunctional& zeta,
                   const EStarResult* warm = nullptr);

struct StepResult {
  WidthBody g_next;
  DualFunctional xi_next;
  double norm_g = 0.0;          // t* = ||g_next||
  double kkt_residual = 0.0;
  double duality_residual = 0.0;
  double stationarity_residual = 0.0;
  double estar_of_increment = 0.0;     // filled by the flow engine
  Eigen::VectorXd solver_x, solver_y;  // warm-start state
};

/// One implicit step: maximizes <xi_prev, g> - tau E(g) - ||g||^2/2 over the
/// discrete C (epigraph variables (a, t) for the norm) and extracts
/// xi_next in J(g_next) from the norm-row multipliers.  Postconditions:
/// duality residual <= 1e-6, stationarity residual <= 1e-6 in the dual-norm
/// metric, and monotonicity of ||xi||_* and E within 1e-8 when the previous
/// body is supplied.  Throws on solver failure with residuals in the message.
StepResult solve_step(const Discretization& d, const DualFunctional& xi_prev,
                      double tau,
                      const std::optional<WidthBody>& g_prev = std::nullopt,
                      const StepResult* warm = nullptr);

// dual-functional JSON files: degree_max + (l, m, value) triples, degree 1
// omitted
std::string dual_to_json(const DualFunctional& xi);
DualFunctional dual_from_json(const std::string& text);

}  // namespace widthflow
