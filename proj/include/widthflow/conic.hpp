#pragma once

#include <Eigen/Dense>
#include <vector>

namespace widthflow {

/// Cone block of the constraint  b - A x  in  K.
/// NonNeg: dim scalar rows >= 0.  Soc: (s_1, s_2, ..., s_dim) with
/// s_1 >= |(s_2..s_dim)|.
struct ConeBlock {
  enum class Type { NonNeg, Soc };
  Type type = Type::NonNeg;
  int dim = 1;
};

/// minimize  (1/2) x' diag(P) x + q' x   subject to  b - A x in K.
struct ConicProblem {
  Eigen::VectorXd P;  // diagonal quadratic, entries >= 0
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;  // rows of A in block order
};

struct ConicSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // multipliers in K* (= K), one per row
  double primal_residual = 0.0;  // max violation of b - Ax in K
  double dual_residual = 0.0;    // inf-norm of P x + q + A' y
  double gap = 0.0;              // |y . (b - A x)|
  int iterations = 0;
  bool polished = false;
  bool converged = false;
};

struct ConicOptions {
  double tol = 1e-8;        // PDHG stopping residual
  int max_iterations = 50000;
  bool polish = true;       // active-set KKT refinement after PDHG
  double polish_tol = 1e-11;
  const ConicSolution* warm_start = nullptr;
};

/// Euclidean projection onto the second-order cone.
Eigen::VectorXd project_soc(const Eigen::VectorXd& s);

/// Preconditioned primal-dual (Chambolle-Pock) iteration with per-block
/// scalar dual steps, followed by an active-set Newton polish of the KKT
/// system.  Deterministic for fixed inputs.
ConicSolution solve_conic(const ConicProblem& p, const ConicOptions& opt);

}  // namespace widthflow
