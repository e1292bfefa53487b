#pragma once

#include <Eigen/Dense>
#include <string>

namespace widthflow {

/// Dense linear program
///    minimize  q' x   subject to  A x <= b,   x free.
/// Solved through the standard-form dual with a two-phase revised simplex,
/// so both the optimizer and the full multiplier vector come out exact to
/// linear-solve precision.
struct LpProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd q;
};

enum class LpStatus { Optimal, Unbounded, Infeasible, NumericalFailure };

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double value = 0.0;        // q' x at the optimum
  Eigen::VectorXd x;         // primal optimizer
  Eigen::VectorXd y;         // multipliers, y >= 0, one per row of A
  std::string message;
  bool ok() const { return status == LpStatus::Optimal; }
};

LpSolution solve_lp(const LpProblem& lp);

}  // namespace widthflow
