#include "widthflow/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace widthflow {

namespace {

struct StandardForm {
  // min cost' y  s.t.  E y = d,  y >= 0
  Eigen::MatrixXd E;
  Eigen::VectorXd d;
  Eigen::VectorXd cost;
};

struct SimplexState {
  std::vector<int> basis;   // column indices, one per row of E
  Eigen::VectorXd yB;       // basic variable values
  bool optimal = false;
  bool unbounded = false;
  bool failed = false;
};

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-9;
constexpr int kMaxIter = 200000;

// Revised simplex with refactorization every iteration (problem sizes here
// keep the basis small).  allow(j) masks which columns may enter.
void run_simplex(const StandardForm& sf, SimplexState& st,
                 const std::vector<char>& allow) {
  const int n = static_cast<int>(sf.E.rows());
  const int m = static_cast<int>(sf.E.cols());
  int stall = 0;
  double last_obj = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::MatrixXd B(n, n);
    for (int r = 0; r < n; ++r) B.col(r) = sf.E.col(st.basis[r]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    st.yB = lu.solve(sf.d);

    Eigen::VectorXd costB(n);
    for (int r = 0; r < n; ++r) costB[r] = sf.cost[st.basis[r]];
    // pi solves B' pi = costB, reusing the factorization of B
    Eigen::VectorXd pi = lu.transpose().solve(costB);

    const double obj = costB.dot(st.yB);
    if (obj < last_obj - 1e-12) {
      last_obj = obj;
      stall = 0;
    } else {
      ++stall;
    }
    const bool bland = stall > 2000;

    // pricing
    Eigen::VectorXd red = sf.cost - sf.E.transpose() * pi;
    int enter = -1;
    double best = -kCostTol;
    std::vector<char> basic(m, 0);
    for (int r = 0; r < n; ++r) basic[st.basis[r]] = 1;
    for (int j = 0; j < m; ++j) {
      if (!allow[j] || basic[j]) continue;
      if (red[j] < best) {
        if (bland) {
          enter = j;
          break;
        }
        best = red[j];
        enter = j;
      }
    }
    if (enter < 0) {
      st.optimal = true;
      return;
    }

    Eigen::VectorXd dir = lu.solve(sf.E.col(enter));
    int leave = -1;
    double step = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n; ++r) {
      if (dir[r] > kPivotTol) {
        const double t = std::max(st.yB[r], 0.0) / dir[r];
        if (t < step - 1e-13 ||
            (t < step + 1e-13 &&
             (leave < 0 || st.basis[r] < st.basis[leave]))) {
          step = t;
          leave = r;
        }
      }
    }
    if (leave < 0) {
      st.unbounded = true;
      return;
    }
    st.basis[leave] = enter;
  }
  st.failed = true;
}

}  // namespace

LpSolution solve_lp(const LpProblem& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  LpSolution sol;

  // Dual standard form: min b' y  s.t.  A' y = -q,  y >= 0.
  StandardForm sf;
  sf.E.resize(n, m + n);  // artificial columns appended
  sf.E.leftCols(m) = lp.A.transpose();
  sf.d = -lp.q;
  // flip rows so d >= 0, artificials form an identity
  Eigen::VectorXd rowsign = Eigen::VectorXd::Ones(n);
  for (int r = 0; r < n; ++r) {
    if (sf.d[r] < 0.0) {
      sf.d[r] = -sf.d[r];
      sf.E.row(r).head(m) = -lp.A.transpose().row(r);
      rowsign[r] = -1.0;
    }
    sf.E.col(m + r).setZero();
    sf.E(r, m + r) = 1.0;
  }

  const double scale = std::max(1.0, sf.d.lpNorm<Eigen::Infinity>());

  // Deterministic right-hand-side perturbation (simulated lexicographic
  // rule): the minimax problems here are heavily degenerate and stall the
  // ratio test otherwise.  Pricing and the primal recovery depend only on
  // the costs and the final basis, so the perturbation never pollutes x;
  // the multipliers are recomputed from the unperturbed d at the end.
  const Eigen::VectorXd d_exact = sf.d;
  for (int r = 0; r < n; ++r) {
    const double frac = std::fmod(0.6180339887498949 * (r + 1), 1.0);
    sf.d[r] += scale * 1e-9 * (0.1 + frac);
  }

  // phase 1
  sf.cost = Eigen::VectorXd::Zero(m + n);
  sf.cost.tail(n).setOnes();
  SimplexState st;
  st.basis.resize(n);
  for (int r = 0; r < n; ++r) st.basis[r] = m + r;
  std::vector<char> allow(m + n, 1);
  run_simplex(sf, st, allow);
  if (st.failed || st.unbounded) {
    sol.status = LpStatus::NumericalFailure;
    sol.message = "phase 1 did not terminate";
    return sol;
  }
  double p1 = 0.0;
  for (int r = 0; r < n; ++r)
    if (st.basis[r] >= m) p1 += std::max(st.yB[r], 0.0);
  if (p1 > 1e-7 * scale) {
    // dual infeasible <=> primal unbounded (our primals are always feasible)
    sol.status = LpStatus::Unbounded;
    sol.message = "dual system infeasible; primal unbounded";
    return sol;
  }

  // drive artificials out of the basis where possible
  for (int r = 0; r < n; ++r) {
    if (st.basis[r] < m) continue;
    Eigen::MatrixXd B(n, n);
    for (int rr = 0; rr < n; ++rr) B.col(rr) = sf.E.col(st.basis[rr]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    for (int j = 0; j < m; ++j) {
      bool basic = false;
      for (int rr = 0; rr < n; ++rr) basic |= (st.basis[rr] == j);
      if (basic) continue;
      Eigen::VectorXd dir = lu.solve(sf.E.col(j));
      if (std::abs(dir[r]) > 1e-7) {
        st.basis[r] = j;
        break;
      }
    }
  }

  // phase 2: artificials may remain basic at level zero but cannot enter
  sf.cost.head(m) = lp.b;
  sf.cost.tail(n).setZero();
  for (int j = m; j < m + n; ++j) allow[j] = 0;
  st.optimal = st.unbounded = st.failed = false;
  run_simplex(sf, st, allow);
  if (st.failed) {
    sol.status = LpStatus::NumericalFailure;
    sol.message = "phase 2 did not terminate";
    return sol;
  }
  if (st.unbounded) {
    sol.status = LpStatus::Infeasible;
    sol.message = "dual unbounded; primal infeasible";
    return sol;
  }

  // recover multipliers (from the unperturbed right-hand side) and the
  // primal point
  sol.y = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd B(n, n);
  Eigen::VectorXd costB(n);
  for (int r = 0; r < n; ++r) {
    B.col(r) = sf.E.col(st.basis[r]);
    costB[r] = sf.cost[st.basis[r]];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> blu(B);
  Eigen::VectorXd yB_exact = blu.solve(d_exact);
  for (int r = 0; r < n; ++r)
    if (st.basis[r] < m) sol.y[st.basis[r]] = std::max(yB_exact[r], 0.0);
  sol.x = rowsign.asDiagonal() *
          B.transpose().partialPivLu().solve(costB).eval();
  sol.value = lp.q.dot(sol.x);
  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace widthflow
