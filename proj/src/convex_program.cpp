#include "widthflow/convex_program.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "widthflow/conic.hpp"
#include "widthflow/simplex.hpp"

namespace widthflow {

namespace {

constexpr double kPi = std::numbers::pi;

// the degree-1 block occupies indices 1, 2, 3 (basis_index(1, m) = 2 + m)
void zero_l1(Eigen::VectorXd& c) {
  for (int a = 1; a <= 3 && a < c.size(); ++a) c[a] = 0.0;
}

void require_l1_zero(const DualFunctional& xi, const char* what) {
  for (int a = 1; a <= 3 && a < xi.comps.size(); ++a)
    if (xi.comps[a] != 0.0)
      throw std::invalid_argument(std::string(what) +
                                  ": degree-1 block must vanish");
}

// minimax LP in the +a.u sign convention:
//   min t  s.t.  |f_i + a.u_i| <= t
// with signed multipliers lambda (sum |lambda| = 1, sum lambda u = 0 and
// lambda' f = t at the optimum).
QuotientNorm minimax_plus(const SphereGrid& grid, const Eigen::VectorXd& f) {
  const Eigen::Index n = grid.size();
  LpProblem lp;
  lp.A.resize(2 * n, 4);
  lp.b.resize(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    //  f_i + a.u_i - t <= 0
    lp.A.row(i) << grid.nodes.row(i), -1.0;
    lp.b[i] = -f[i];
    //  -f_i - a.u_i - t <= 0
    lp.A.row(n + i) << -grid.nodes.row(i), -1.0;
    lp.b[n + i] = f[i];
  }
  lp.q.setZero(4);
  lp.q[3] = 1.0;
  LpSolution s = solve_lp(lp);
  if (!s.ok()) throw std::runtime_error("quotient-norm LP failed: " + s.message);
  QuotientNorm r;
  r.value = std::max(0.0, s.x[3]);
  r.witness_a = s.x.head<3>();
  r.node_multipliers = s.y.head(n) - s.y.tail(n);
  return r;
}

// Shared constraint assembly for the discrete C over the odd coefficient
// columns, with extra free columns appended (used for the norm epigraph).
// Row layout: optional caller rows come first; here we emit
//   [box: 2N NonNeg] [convexity: N Soc3].
void append_C_constraints(const Discretization& d,
                          const std::vector<int>& odd, int n_extra,
                          Eigen::MatrixXd& A, Eigen::VectorXd& b,
                          std::vector<ConeBlock>& cones, int row0) {
  const Eigen::Index N = d.grid.size();
  const int nc = static_cast<int>(odd.size());
  const int ntot = nc + n_extra;
  const double kappa = feasible_box_bound();
  for (Eigen::Index i = 0; i < N; ++i) {
    // kappa - g_i >= 0 and kappa + g_i >= 0
    for (int c = 0; c < nc; ++c) {
      A(row0 + 2 * i, c) = d.table.val(i, odd[c]);
      A(row0 + 2 * i + 1, c) = -d.table.val(i, odd[c]);
    }
    A.block(row0 + 2 * i, nc, 2, n_extra).setZero();
    b[row0 + 2 * i] = kappa;
    b[row0 + 2 * i + 1] = kappa;
  }
  cones.push_back({ConeBlock::Type::NonNeg, static_cast<int>(2 * N)});
  const int soc0 = row0 + static_cast<int>(2 * N);
  for (Eigen::Index i = 0; i < N; ++i) {
    // M(u_i) psd  <=>  (M11+M22, M11-M22, 2 M12) in Soc3;
    // M11+M22 = 1 + (h11+h22+2 val).c etc.
    for (int c = 0; c < nc; ++c) {
      const int a = odd[c];
      A(soc0 + 3 * i, c) =
          -(d.table.h11(i, a) + d.table.h22(i, a) + 2.0 * d.table.val(i, a));
      A(soc0 + 3 * i + 1, c) = -(d.table.h11(i, a) - d.table.h22(i, a));
      A(soc0 + 3 * i + 2, c) = -2.0 * d.table.h12(i, a);
    }
    A.block(soc0 + 3 * i, nc, 3, n_extra).setZero();
    b[soc0 + 3 * i] = 1.0;
    b[soc0 + 3 * i + 1] = 0.0;
    b[soc0 + 3 * i + 2] = 0.0;
    cones.push_back({ConeBlock::Type::Soc, 3});
  }
  (void)ntot;
}

Eigen::VectorXd expand_odd(const Discretization& d,
                           const std::vector<int>& odd,
                           const Eigen::VectorXd& c_odd) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(d.basis.size());
  for (size_t k = 0; k < odd.size(); ++k) full[odd[k]] = c_odd[k];
  return full;
}

Eigen::VectorXd restrict_odd(const std::vector<int>& odd,
                             const Eigen::VectorXd& full) {
  Eigen::VectorXd out(odd.size());
  for (size_t k = 0; k < odd.size(); ++k) out[k] = full[odd[k]];
  return out;
}

// crude but safe upper bound on the dual norm of a P-perp functional:
// |<rho, g>| <= sum_a |rho_a| |c_a(g)| and |c_a| <= sqrt(4 pi) when
// max_i |g + a.u| <= 1.
double dual_norm_upper_bound(const Eigen::VectorXd& comps) {
  return std::sqrt(4.0 * kPi) * comps.lpNorm<1>();
}

}  // namespace

DualFunctional make_dual(const Eigen::VectorXd& comps) {
  DualFunctional xi{comps};
  zero_l1(xi.comps);
  return xi;
}

DualFunctional zero_dual(int L) {
  return DualFunctional{Eigen::VectorXd::Zero(basis_count(L))};
}

double energy(const Eigen::VectorXd& c) {
  double e = 0.0;
  for (int a = 0; a < c.size(); ++a) {
    const int l = basis_degree(a);
    e += (l * (l + 1) / 2.0 - 1.0) * c[a] * c[a];
  }
  return e;
}

Eigen::VectorXd energy_gradient(const Eigen::VectorXd& c) {
  Eigen::VectorXd g(c.size());
  for (int a = 0; a < c.size(); ++a) {
    const int l = basis_degree(a);
    g[a] = (l * (l + 1.0) - 2.0) * c[a];
  }
  return g;
}

QuotientNorm quotient_norm(const Discretization& d, const Eigen::VectorXd& c) {
  return minimax_plus(d.grid, d.table.val * c);
}

double dual_norm(const Discretization& d, const DualFunctional& xi) {
  require_l1_zero(xi, "dual_norm");
  if (xi.comps.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // max xi'c  s.t.  |g_c(u_i) + a.u_i| <= 1, degree-1 columns dropped
  const int nb = d.basis.size();
  std::vector<int> cols;
  for (int a = 0; a < nb; ++a)
    if (basis_degree(a) != 1) cols.push_back(a);
  const int nc = static_cast<int>(cols.size());
  const Eigen::Index N = d.grid.size();
  LpProblem lp;
  lp.A.resize(2 * N, nc + 3);
  lp.b.resize(2 * N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (int c = 0; c < nc; ++c) {
      lp.A(i, c) = d.table.val(i, cols[c]);
      lp.A(N + i, c) = -d.table.val(i, cols[c]);
    }
    lp.A.block<1, 3>(i, nc) = d.grid.nodes.row(i);
    lp.A.block<1, 3>(N + i, nc) = -d.grid.nodes.row(i);
    lp.b[i] = 1.0;
    lp.b[N + i] = 1.0;
  }
  lp.q.setZero(nc + 3);
  for (int c = 0; c < nc; ++c) lp.q[c] = -xi.comps[cols[c]];
  LpSolution s = solve_lp(lp);
  if (s.status == LpStatus::Unbounded)
    throw std::invalid_argument(
        "dual_norm: functional does not annihilate linear functions");
  if (!s.ok()) throw std::runtime_error("dual-norm LP failed: " + s.message);
  return -s.value;
}

DualFunctional duality_select(const Discretization& d,
                              const Eigen::VectorXd& c) {
  const Eigen::VectorXd g_nodes = d.table.val * c;
  QuotientNorm qn = minimax_plus(d.grid, g_nodes);
  const double t = qn.value;
  if (t < 1e-14) return zero_dual(d.basis.degree_max());

  auto build = [&](const Eigen::VectorXd& lambda) {
    DualFunctional xi{(d.table.val.transpose() * lambda * t).eval()};
    zero_l1(xi.comps);
    return xi;
  };
  auto check = [&](const DualFunctional& xi) {
    const double pairing = pair(xi, c);
    if (std::abs(pairing - t * t) > 1e-7) return false;
    return std::abs(dual_norm(d, xi) - t) <= 1e-6;
  };

  DualFunctional xi = build(qn.node_multipliers);
  if (check(xi)) return xi;

  // degenerate active set: retry with a deterministic tiny perturbation
  Eigen::VectorXd fp = g_nodes;
  for (Eigen::Index i = 0; i < fp.size(); ++i)
    fp[i] += 1e-12 * std::sin(0.73 * static_cast<double>(i + 1));
  QuotientNorm qp = minimax_plus(d.grid, fp);
  DualFunctional xi2 = build(qp.node_multipliers);
  if (check(xi2)) return xi2;
  throw std::runtime_error("duality_select: residual postconditions failed");
}

std::vector<int> odd_indices(int L) {
  std::vector<int> out;
  for (int a = 0; a < basis_count(L); ++a) {
    const int l = basis_degree(a);
    if (l % 2 == 1 && l >= 3) out.push_back(a);
  }
  return out;
}

double feasible_box_bound() { return std::sqrt(3.0 / 8.0) - 0.5; }

Eigen::VectorXd round_to_feasible(const Discretization& d,
                                  const Eigen::VectorXd& c) {
  const double kappa = feasible_box_bound();
  auto feasible = [&](const Eigen::VectorXd& v) {
    if ((d.table.val * v).cwiseAbs().maxCoeff() > kappa) return false;
    return convexity_margin(d, v) >= 0.0;
  };
  if (feasible(c)) return c;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid * c))
      lo = mid;
    else
      hi = mid;
  }
  return lo * c;
}

double chi_star(const Discretization& d, const DualFunctional& xi) {
  require_l1_zero(xi, "chi_star");
  const std::vector<int> odd = odd_indices(d.basis.degree_max());
  Eigen::VectorXd xi_odd = restrict_odd(odd, xi.comps);
  if (xi_odd.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // chi*(-xi) = chi*(xi) since C is symmetric; canonicalize the sign so the
  // identity holds exactly rather than to solver accuracy.
  for (int c = 0; c < xi_odd.size(); ++c) {
    if (xi_odd[c] != 0.0) {
      if (xi_odd[c] < 0.0) xi_odd = -xi_odd;
      break;
    }
  }
  const Eigen::Index N = d.grid.size();
  const int nc = static_cast<int>(odd.size());
  ConicProblem p;
  p.P = Eigen::VectorXd::Zero(nc);
  p.q = -xi_odd;
  p.A.resize(5 * N, nc);
  p.b.resize(5 * N);
  append_C_constraints(d, odd, 0, p.A, p.b, p.cones, 0);
  ConicOptions opt;
  // every consumer treats chi* as a certified lower bound (the rounding
  // step guarantees feasibility), so a moderate budget suffices: extra
  // accuracy only tightens inequalities that already hold
  opt.tol = 1e-6;
  opt.max_iterations = 4000;
  opt.polish = true;
  ConicSolution s = solve_conic(p, opt);
  const Eigen::VectorXd g = round_to_feasible(d, expand_odd(d, odd, s.x));
  double value = 0.0;
  for (int c = 0; c < nc; ++c) value += xi_odd[c] * g[odd[c]];
  return value;
}

EStarResult e_star(const Discretization& d, const DualFunctional& zeta,
                   const EStarResult* warm) {
  require_l1_zero(zeta, "e_star");
  const std::vector<int> odd = odd_indices(d.basis.degree_max());
  const Eigen::Index N = d.grid.size();
  const int nc = static_cast<int>(odd.size());
  ConicProblem p;
  p.P.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const int l = basis_degree(odd[c]);
    p.P[c] = l * (l + 1.0) - 2.0;
  }
  p.q = -restrict_odd(odd, zeta.comps);
  p.A.resize(5 * N, nc);
  p.b.resize(5 * N);
  append_C_constraints(d, odd, 0, p.A, p.b, p.cones, 0);
  ConicOptions opt;
  opt.tol = 1e-9;
  opt.max_iterations = 50000;
  ConicSolution ws;
  if (warm && warm->solver_x.size() == nc) {
    ws.x = warm->solver_x;
    ws.y = warm->solver_y;
    opt.warm_start = &ws;
  }
  ConicSolution s = solve_conic(p, opt);
  EStarResult r;
  r.argmax = round_to_feasible(d, expand_odd(d, odd, s.x));
  r.value = zeta.comps.dot(r.argmax) - energy(r.argmax);
  r.kkt_residual = std::max({s.primal_residual, s.dual_residual, s.gap});
  r.iterations = s.iterations;
  r.solver_x = s.x;
  r.solver_y = s.y;
  return r;
}

StepResult solve_step(const Discretization& d, const DualFunctional& xi_prev,
                      double tau, const std::optional<WidthBody>& g_prev,
                      const StepResult* warm) {
  if (tau <= 0.0) throw std::invalid_argument("solve_step: tau must be > 0");
  require_l1_zero(xi_prev, "solve_step");
  const std::vector<int> odd = odd_indices(d.basis.degree_max());
  const Eigen::Index N = d.grid.size();
  const int nc = static_cast<int>(odd.size());
  const int nv = nc + 4;  // c_odd, a, t

  ConicProblem p;
  p.P = Eigen::VectorXd::Zero(nv);
  for (int c = 0; c < nc; ++c) {
    const int l = basis_degree(odd[c]);
    p.P[c] = tau * (l * (l + 1.0) - 2.0);
  }
  p.P[nv - 1] = 1.0;  // t^2/2
  p.q = Eigen::VectorXd::Zero(nv);
  p.q.head(nc) = -restrict_odd(odd, xi_prev.comps);
  p.A.resize(7 * N, nv);
  p.b.resize(7 * N);
  // norm epigraph rows: +-(g_i + a.u_i) <= t
  for (Eigen::Index i = 0; i < N; ++i) {
    for (int c = 0; c < nc; ++c) {
      p.A(2 * i, c) = d.table.val(i, odd[c]);
      p.A(2 * i + 1, c) = -d.table.val(i, odd[c]);
    }
    p.A.block<1, 3>(2 * i, nc) = d.grid.nodes.row(i);
    p.A.block<1, 3>(2 * i + 1, nc) = -d.grid.nodes.row(i);
    p.A(2 * i, nv - 1) = -1.0;
    p.A(2 * i + 1, nv - 1) = -1.0;
    p.b[2 * i] = 0.0;
    p.b[2 * i + 1] = 0.0;
  }
  p.cones.push_back({ConeBlock::Type::NonNeg, static_cast<int>(2 * N)});
  append_C_constraints(d, odd, 4, p.A, p.b, p.cones,
                       static_cast<int>(2 * N));

  auto attempt = [&](const ConicOptions& opt) { return solve_conic(p, opt); };

  ConicOptions opt;
  opt.tol = 1e-9;
  opt.max_iterations = 60000;
  ConicSolution ws;
  if (warm && warm->solver_x.size() == nv) {
    ws.x = warm->solver_x;
    ws.y = warm->solver_y;
    opt.warm_start = &ws;
  }
  ConicSolution s = attempt(opt);

  auto extract = [&](const ConicSolution& sol, StepResult& r,
                     std::string& why) {
    r.g_next = WidthBody{expand_odd(d, odd, sol.x.head(nc))};
    const double t = std::max(0.0, sol.x[nv - 1]);
    r.norm_g = t;
    // xi from the norm-row multipliers: xi_a = sum_i (y+ - y-) Y_a(u_i)
    Eigen::VectorXd beta(N);
    for (Eigen::Index i = 0; i < N; ++i)
      beta[i] = sol.y[2 * i] - sol.y[2 * i + 1];
    r.xi_next = DualFunctional{(d.table.val.transpose() * beta).eval()};
    zero_l1(r.xi_next.comps);
    r.kkt_residual =
        std::max({sol.primal_residual, sol.dual_residual, sol.gap});
    r.solver_x = sol.x;
    r.solver_y = sol.y;

    const double pairing = pair(r.xi_next, r.g_next.coeffs);
    const double dn = dual_norm(d, r.xi_next);
    r.duality_residual = std::abs(pairing - t * t) + std::abs(dn - t);
    if (r.duality_residual > 1e-6) {
      why = "duality residual " + std::to_string(r.duality_residual);
      return false;
    }
    // stationarity xi_k - xi_{k-1} + tau (grad E + nu) = 0 in the dual norm:
    // the conic dual residual on the c-columns is exactly this functional
    Eigen::VectorXd rho_odd =
        (p.P.head(nc).cwiseProduct(sol.x.head(nc)) + p.q.head(nc) +
         p.A.leftCols(nc).transpose() * sol.y)
            .eval();
    r.stationarity_residual =
        dual_norm_upper_bound(expand_odd(d, odd, rho_odd));
    if (r.stationarity_residual > 1e-6) {
      // the cheap bound is loose; fall back to the exact LP before failing
      r.stationarity_residual =
          dual_norm(d, make_dual(expand_odd(d, odd, rho_odd)));
      if (r.stationarity_residual > 1e-6) {
        why = "stationarity residual " +
              std::to_string(r.stationarity_residual);
        return false;
      }
    }
    // monotonicity of E and of the dual norm
    if (g_prev) {
      if (energy(r.g_next.coeffs) > energy(g_prev->coeffs) + 1e-8) {
        why = "energy monotonicity violated";
        return false;
      }
      const double dn_prev =
          warm ? warm->norm_g : dual_norm(d, xi_prev);
      if (dn > dn_prev + 1e-8) {
        why = "dual-norm monotonicity violated";
        return false;
      }
    }
    return true;
  };

  StepResult r;
  std::string why;
  if (extract(s, r, why)) return r;

  // escalate: cold start, tighter tolerance, larger budget
  ConicOptions hard;
  hard.tol = 1e-11;
  hard.max_iterations = 300000;
  ConicSolution s2 = attempt(hard);
  StepResult r2;
  std::string why2;
  if (extract(s2, r2, why2)) return r2;
  throw std::runtime_error("solve_step failed: " + why2 + " (first pass: " +
                           why + "), kkt residual " +
                           std::to_string(r2.kkt_residual));
}

std::string dual_to_json(const DualFunctional& xi) {
  std::ostringstream os;
  const int L = xi.degree_max();
  os << "{\n  \"degree_max\": " << L << ",\n  \"components\": [";
  bool first = true;
  char buf[64];
  for (int a = 0; a < xi.comps.size(); ++a) {
    const int l = basis_degree(a);
    if (l == 1) continue;
    const int m = a - l * (l + 1);
    std::snprintf(buf, sizeof buf, "%.17g", xi.comps[a]);
    os << (first ? "\n" : ",\n") << "    [" << l << ", " << m << ", " << buf
       << "]";
    first = false;
  }
  os << "\n  ]\n}\n";
  return os.str();
}

DualFunctional dual_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const int L = j.at("degree_max").get<int>();
  if (L < 1 || L > 30)
    throw std::invalid_argument("dual file: bad degree_max");
  Eigen::VectorXd comps = Eigen::VectorXd::Zero(basis_count(L));
  for (const auto& triple : j.at("components")) {
    const int l = triple.at(0).get<int>();
    const int m = triple.at(1).get<int>();
    if (l < 0 || l > L || std::abs(m) > l)
      throw std::invalid_argument("dual file: index out of range");
    if (l == 1) throw std::invalid_argument("dual file: degree-1 component");
    comps[basis_index(l, m)] = triple.at(2).get<double>();
  }
  return DualFunctional{comps};
}

}  // namespace widthflow
