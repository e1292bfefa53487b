#include "widthflow/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace widthflow {

namespace {

// per-block Euclidean projection of the slack vector onto K
void project_cone(const std::vector<ConeBlock>& cones, Eigen::VectorXd& s) {
  int row = 0;
  for (const auto& blk : cones) {
    if (blk.type == ConeBlock::Type::NonNeg) {
      for (int i = 0; i < blk.dim; ++i) s[row + i] = std::max(0.0, s[row + i]);
    } else {
      const double t = s[row];
      const double nrm = s.segment(row + 1, blk.dim - 1).norm();
      if (nrm <= t) {
        // inside, keep
      } else if (nrm <= -t) {
        s.segment(row, blk.dim).setZero();
      } else {
        const double alpha = 0.5 * (1.0 + t / nrm);
        s[row] = alpha * nrm;
        s.segment(row + 1, blk.dim - 1) *= alpha;
      }
    }
    row += blk.dim;
  }
}

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double combined() const { return std::max({primal, dual, gap}); }
};

Residuals compute_residuals(const ConicProblem& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) {
  Residuals r;
  const Eigen::VectorXd s = p.b - p.A * x;
  int row = 0;
  for (const auto& blk : p.cones) {
    if (blk.type == ConeBlock::Type::NonNeg) {
      for (int i = 0; i < blk.dim; ++i)
        r.primal = std::max(r.primal, -s[row + i]);
    } else {
      const double nrm = s.segment(row + 1, blk.dim - 1).norm();
      r.primal = std::max(r.primal, nrm - s[row]);
    }
    row += blk.dim;
  }
  r.dual = (p.P.cwiseProduct(x) + p.q + p.A.transpose() * y)
               .cwiseAbs()
               .maxCoeff();
  r.gap = std::abs(y.dot(s));
  return r;
}

// --- active-set Newton polish --------------------------------------------

struct ActiveSet {
  std::vector<int> lin_rows;    // active NonNeg rows
  std::vector<int> soc_blocks;  // indices into cones of active Soc blocks
};

struct BlockIndex {
  std::vector<int> start;  // first row of each cone block
};

BlockIndex index_blocks(const std::vector<ConeBlock>& cones) {
  BlockIndex bi;
  int row = 0;
  for (const auto& blk : cones) {
    bi.start.push_back(row);
    row += blk.dim;
  }
  return bi;
}

// Solves the KKT system of the equality-constrained subproblem fixed by the
// active set.  Returns false when Newton stalls or the system is singular.
bool newton_on_active_set(const ConicProblem& p, const BlockIndex& bi,
                          const ActiveSet& act, Eigen::VectorXd& x,
                          Eigen::VectorXd& lam, double tol) {
  const int n = static_cast<int>(x.size());
  const int k = static_cast<int>(act.lin_rows.size() + act.soc_blocks.size());
  if (lam.size() != k) lam = Eigen::VectorXd::Zero(k);

  auto assemble = [&](Eigen::VectorXd& F, Eigen::MatrixXd* J) {
    // F = [P x + q + C(x)' lam ; c(x)], J its Jacobian
    Eigen::VectorXd s = p.b - p.A * x;
    Eigen::VectorXd r1 = p.P.cwiseProduct(x) + p.q;
    Eigen::MatrixXd C(k, n);
    Eigen::VectorXd cval(k);
    Eigen::MatrixXd H;
    if (J) {
      H = Eigen::MatrixXd::Zero(n, n);
      H.diagonal() = p.P;
    }
    int ci = 0;
    for (int rowi : act.lin_rows) {
      C.row(ci) = p.A.row(rowi);                  // grad of a'x - b
      cval[ci] = p.A.row(rowi).dot(x) - p.b[rowi];
      ++ci;
    }
    for (int blki : act.soc_blocks) {
      const int r0 = bi.start[blki];
      const int d = p.cones[blki].dim;
      const Eigen::VectorXd sp = s.segment(r0 + 1, d - 1);
      const double nrm = sp.norm();
      if (nrm < 1e-12) return false;  // apex: cannot linearize
      const Eigen::VectorXd shat = sp / nrm;
      const Eigen::MatrixXd Ap = p.A.middleRows(r0 + 1, d - 1);
      // constraint value ||s_perp|| - s_1 = 0, gradient a_1 - Ap' shat
      C.row(ci) =
          p.A.row(r0) - (Ap.transpose() * shat).transpose();
      cval[ci] = nrm - s[r0];
      if (J) {
        // curvature of -||s_perp||: Ap' (I - shat shat')/nrm Ap
        Eigen::MatrixXd proj =
            (Eigen::MatrixXd::Identity(d - 1, d - 1) - shat * shat.transpose()) /
            nrm;
        H.noalias() += lam[ci] * (Ap.transpose() * proj * Ap);
      }
      ++ci;
    }
    r1.noalias() += C.transpose() * lam;
    F.resize(n + k);
    F.head(n) = r1;
    F.tail(k) = cval;
    if (J) {
      J->setZero(n + k, n + k);
      J->topLeftCorner(n, n) = H;
      J->topRightCorner(n, k) = C.transpose();
      J->bottomLeftCorner(k, n) = C;
    }
    return true;
  };

  const bool dbg = std::getenv("WF_CONIC_DEBUG") != nullptr;
  Eigen::VectorXd F;
  Eigen::MatrixXd J;
  if (!assemble(F, &J)) return false;
  double fnorm = F.cwiseAbs().maxCoeff();
  if (dbg) std::fprintf(stderr, "  newton: f0=%.3e tol=%.1e\n", fnorm, tol);
  for (int it = 0; it < 50 && fnorm > tol; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd step = lu.solve(-F);
    if (!step.allFinite()) return false;
    // singularity guard: the residual of the solve must be small relative
    // to F itself (redundant active rows make J rank-deficient)
    if ((J * step + F).cwiseAbs().maxCoeff() >
        std::max(1e-12, 1e-3 * fnorm)) {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
      step = cod.solve(-F);
      if (!step.allFinite()) return false;
    }
    double alpha = 1.0;
    Eigen::VectorXd x0 = x, l0 = lam;
    bool improved = false;
    for (int ls = 0; ls < 6; ++ls) {
      x = x0 + alpha * step.head(n);
      lam = l0 + alpha * step.tail(k);
      Eigen::VectorXd Ftrial;
      if (assemble(Ftrial, nullptr)) {
        const double fn = Ftrial.cwiseAbs().maxCoeff();
        if (fn < fnorm || fn < tol) {
          improved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!improved) {
      x = x0;
      lam = l0;
      if (dbg) std::fprintf(stderr, "  newton: stalled f=%.3e\n", fnorm);
      break;
    }
    if (!assemble(F, &J)) return false;
    fnorm = F.cwiseAbs().maxCoeff();
    if (dbg) std::fprintf(stderr, "  newton: it=%d f=%.3e\n", it, fnorm);
  }
  // a mildly stalled Newton is still useful: the caller re-checks the full
  // KKT residuals before accepting the polish
  return fnorm <= std::max(10.0 * tol, 1e-9);
}

// One polish attempt from a PDHG point.  Returns true and fills sol on
// success.
bool try_polish(const ConicProblem& p, const BlockIndex& bi,
                const Eigen::VectorXd& x_in, const Eigen::VectorXd& y_in,
                double tol, ConicSolution& sol) {
  const int n = static_cast<int>(x_in.size());
  Eigen::VectorXd s = p.b - p.A * x_in;

  // thresholds are relative to the largest multiplier: near the flow's
  // fixed point the whole dual mass scales like ||g|| and absolute cutoffs
  // would classify every row as inactive
  const double yscale = y_in.cwiseAbs().maxCoeff();
  if (yscale <= 0.0) return false;
  ActiveSet act;
  for (size_t blki = 0; blki < p.cones.size(); ++blki) {
    const auto& blk = p.cones[blki];
    const int r0 = bi.start[blki];
    if (blk.type == ConeBlock::Type::NonNeg) {
      for (int i = 0; i < blk.dim; ++i)
        if (y_in[r0 + i] > std::max(1e-6 * yscale, s[r0 + i]))
          act.lin_rows.push_back(r0 + i);
    } else {
      const double margin = s[r0] - s.segment(r0 + 1, blk.dim - 1).norm();
      const double ynorm = y_in.segment(r0, blk.dim).norm();
      if (margin < 1e-5 && ynorm > 1e-6 * yscale)
        act.soc_blocks.push_back(static_cast<int>(blki));
    }
  }

  const bool dbg = std::getenv("WF_CONIC_DEBUG") != nullptr;
  Eigen::VectorXd x = x_in;
  Eigen::VectorXd lam;
  for (int round = 0; round < 40; ++round) {
    // far more active rows than variables means the guess is hopeless;
    // fail fast instead of factoring a huge singular KKT system
    if (static_cast<int>(act.lin_rows.size() + act.soc_blocks.size()) >
        4 * n) {
      if (dbg) std::fprintf(stderr, "polish: active set blow-up\n");
      return false;
    }
    lam.resize(0);
    if (!newton_on_active_set(p, bi, act, x, lam, tol)) {
      // a previous equality step may have moved x somewhere Newton cannot
      // linearize (SOC apex, hopeless line search); the PDHG iterate is
      // near-feasible, so retry the same working set from there
      x = x_in;
      lam.resize(0);
      if (!newton_on_active_set(p, bi, act, x, lam, tol)) {
        if (dbg)
          std::fprintf(stderr,
                       "polish: newton failed round %d k=%zu yscale=%.3e\n",
                       round, act.lin_rows.size() + act.soc_blocks.size(),
                       yscale);
        return false;
      }
    }

    // check multiplier signs; drop offenders
    bool changed = false;
    {
      ActiveSet kept;
      int ci = 0;
      for (int rowi : act.lin_rows) {
        if (lam[ci] >= -1e-9)
          kept.lin_rows.push_back(rowi);
        else
          changed = true;
        ++ci;
      }
      for (int blki : act.soc_blocks) {
        if (lam[ci] >= -1e-9)
          kept.soc_blocks.push_back(blki);
        else
          changed = true;
        ++ci;
      }
      act = kept;
    }
    if (changed) continue;

    // check feasibility of inactive constraints; add the worst offenders
    // only.  Adding everything at once after a bad equality step can pull
    // in hundreds of rows (a singular working set); the true contact set
    // is small, so a few rows per round converge quickly.
    s = p.b - p.A * x;
    std::vector<std::pair<double, int>> viol;  // (violation, encoded index)
    for (size_t blki = 0; blki < p.cones.size(); ++blki) {
      const auto& blk = p.cones[blki];
      const int r0 = bi.start[blki];
      if (blk.type == ConeBlock::Type::NonNeg) {
        for (int i = 0; i < blk.dim; ++i) {
          if (s[r0 + i] < -1e-9 &&
              std::find(act.lin_rows.begin(), act.lin_rows.end(), r0 + i) ==
                  act.lin_rows.end())
            viol.push_back({-s[r0 + i], r0 + i});
        }
      } else {
        const double margin = s[r0] - s.segment(r0 + 1, blk.dim - 1).norm();
        if (margin < -1e-9 &&
            std::find(act.soc_blocks.begin(), act.soc_blocks.end(),
                      static_cast<int>(blki)) == act.soc_blocks.end())
          viol.push_back({-margin, -1 - static_cast<int>(blki)});
      }
    }
    std::sort(viol.begin(), viol.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    int added = 0;
    for (const auto& [v, code] : viol) {
      if (added >= 16 ||
          static_cast<int>(act.lin_rows.size() + act.soc_blocks.size()) >= n)
        break;
      if (code >= 0)
        act.lin_rows.push_back(code);
      else
        act.soc_blocks.push_back(-1 - code);
      ++added;
      changed = true;
    }
    if (!viol.empty() && added == 0) {
      if (dbg) std::fprintf(stderr, "polish: working set full\n");
      return false;  // violations remain but the working set is full
    }
    if (changed) continue;

    // success: rebuild the full multiplier vector
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p.b.size());
    int ci = 0;
    for (int rowi : act.lin_rows) y[rowi] = std::max(0.0, lam[ci++]);
    for (int blki : act.soc_blocks) {
      const double mu = std::max(0.0, lam[ci++]);
      const int r0 = bi.start[blki];
      const int d = p.cones[blki].dim;
      Eigen::VectorXd sp = s.segment(r0 + 1, d - 1);
      const double nrm = sp.norm();
      if (nrm > 1e-14) {
        y[r0] = mu;
        y.segment(r0 + 1, d - 1) = -mu * sp / nrm;
      } else {
        y[r0] = mu;
      }
    }
    Residuals r = compute_residuals(p, x, y);
    if (dbg)
      std::fprintf(stderr,
                   "polish: done round %d k=%zu res=%.3e/%.3e/%.3e\n", round,
                   act.lin_rows.size() + act.soc_blocks.size(), r.primal,
                   r.dual, r.gap);
    sol.x = x;
    sol.y = y;
    sol.primal_residual = r.primal;
    sol.dual_residual = r.dual;
    sol.gap = r.gap;
    sol.polished = true;
    return true;
  }
  if (dbg) std::fprintf(stderr, "polish: round limit\n");
  return false;
}

}  // namespace

Eigen::VectorXd project_soc(const Eigen::VectorXd& s) {
  Eigen::VectorXd out = s;
  std::vector<ConeBlock> one{
      {ConeBlock::Type::Soc, static_cast<int>(s.size())}};
  project_cone(one, out);
  return out;
}

ConicSolution solve_conic(const ConicProblem& p, const ConicOptions& opt) {
  const int n = static_cast<int>(p.q.size());
  const int m = static_cast<int>(p.b.size());
  if (p.A.rows() != m || p.A.cols() != n || p.P.size() != n)
    throw std::invalid_argument("solve_conic: inconsistent dimensions");
  {
    int rows = 0;
    for (const auto& blk : p.cones) rows += blk.dim;
    if (rows != m) throw std::invalid_argument("solve_conic: cone row count");
  }
  const BlockIndex bi = index_blocks(p.cones);

  // diagonal preconditioning; SOC blocks share one scalar dual step
  Eigen::VectorXd rowsum = p.A.cwiseAbs().rowwise().sum();
  Eigen::VectorXd colsum = p.A.cwiseAbs().colwise().sum();
  Eigen::VectorXd sigma(m), tau(n);
  for (int i = 0; i < m; ++i)
    sigma[i] = rowsum[i] > 1e-300 ? 1.0 / rowsum[i] : 1.0;
  for (size_t blki = 0; blki < p.cones.size(); ++blki) {
    if (p.cones[blki].type != ConeBlock::Type::Soc) continue;
    const int r0 = bi.start[blki];
    const int d = p.cones[blki].dim;
    const double s = sigma.segment(r0, d).minCoeff();
    sigma.segment(r0, d).setConstant(s);
  }
  for (int j = 0; j < n; ++j)
    tau[j] = colsum[j] > 1e-300 ? 1.0 / colsum[j] : 1.0;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (opt.warm_start && opt.warm_start->x.size() == n &&
      opt.warm_start->y.size() == m) {
    x = opt.warm_start->x;
    y = opt.warm_start->y;
  }
  Eigen::VectorXd xbar = x;

  ConicSolution best;
  best.x = x;
  best.y = y;
  {
    Residuals r0 = compute_residuals(p, x, y);
    best.primal_residual = r0.primal;
    best.dual_residual = r0.dual;
    best.gap = r0.gap;
  }
  double best_combined =
      std::max({best.primal_residual, best.dual_residual, best.gap});
  double polish_trigger = 1e-4;

  // A warm start usually carries the right active set already; polishing
  // before any first-order iterations turns near-identical consecutive
  // solves (the flow loop) into a handful of Newton steps.
  if (opt.polish && opt.warm_start && opt.warm_start->x.size() == n) {
    ConicSolution pol;
    if (try_polish(p, bi, x, y, opt.polish_tol, pol) &&
        std::max({pol.primal_residual, pol.dual_residual, pol.gap}) <
            std::max(opt.tol, 1e-9)) {
      pol.iterations = 0;
      pol.converged = true;
      return pol;
    }
  }

  // schedule extra polish attempts even before the residual trigger fires;
  // a failed attempt costs one small factorization, a successful one saves
  // tens of thousands of first-order iterations
  int next_scheduled_polish = 300;

  Eigen::VectorXd v(m), w(m), xn(n);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    // dual ascent with Moreau-decomposed cone projection
    v = y + sigma.cwiseProduct(p.A * xbar);
    w = p.b - v.cwiseQuotient(sigma);
    project_cone(p.cones, w);
    y = v - sigma.cwiseProduct(p.b - w);
    // primal descent with the diagonal quadratic prox
    xn = x - tau.cwiseProduct(p.A.transpose() * y + p.q);
    xn.array() /= (1.0 + tau.array() * p.P.array());
    xbar = 2.0 * xn - x;
    x = xn;

    if ((it + 1) % 50 == 0) {
      Residuals r = compute_residuals(p, x, y);
      const double c = r.combined();
      if (c < best_combined) {
        best_combined = c;
        best.x = x;
        best.y = y;
        best.primal_residual = r.primal;
        best.dual_residual = r.dual;
        best.gap = r.gap;
      }
      const bool scheduled = (it + 1) >= next_scheduled_polish;
      if (opt.polish && (c < polish_trigger || scheduled)) {
        ConicSolution pol;
        if (try_polish(p, bi, x, y, opt.polish_tol, pol)) {
          const double pc = std::max(
              {pol.primal_residual, pol.dual_residual, pol.gap});
          if (pc < std::max(opt.tol, 1e-9)) {
            pol.iterations = it + 1;
            pol.converged = true;
            return pol;
          }
        }
        if (c < polish_trigger) polish_trigger /= 10.0;
        if (scheduled) next_scheduled_polish *= 2;
      }
      if (c < opt.tol && !opt.polish) break;
      if (c < opt.tol * 1e-2) break;  // PDHG alone got there
    }
  }
  best.iterations = it;
  best.converged = best_combined <= opt.tol;
  return best;
}

}  // namespace widthflow
