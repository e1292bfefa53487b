#include "widthflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace widthflow {

namespace {

constexpr double kHaltNorm = 1e-9;

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void append_double(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

// geometric columns shared by every recorded step
void measure(const Discretization& d, FlowStep& st) {
  WidthBody body{st.g};
  st.R = circumradius(d, body).radius;
  st.r = inradius(d, body).radius;
  VolumeReport vr = volume(d, body);
  st.V = vr.v_energy;
  st.sigma = surface_area(d, body);
  st.E = energy(st.g);
  st.convexity_margin = convexity_margin(d, st.g);
}

// slack of the discrete energy inequality over [0, k], from columns
// already recorded
double slack_prefix(const std::vector<FlowStep>& steps, double tau, int k) {
  double sum_E = 0.0;
  for (int l = 1; l <= k; ++l) sum_E += tau * steps[l].E;
  const double dn0 = steps[0].dual_norm_xi;
  const double dnk = steps[k].dual_norm_xi;
  return 0.5 * dn0 * dn0 - 0.5 * dnk * dnk - steps[k].estar_cumvar - sum_E;
}

// piecewise-linear interpolant of the xi column at time t
Eigen::VectorXd xi_at(const FlowTrace& trace, double t) {
  const auto& steps = trace.steps;
  if (t <= steps.front().time) return steps.front().xi;
  if (t >= steps.back().time) return steps.back().xi;
  const int k =
      std::min<int>(static_cast<int>(t / trace.tau) + 1,
                    static_cast<int>(steps.size()) - 1);
  const double a = (steps[k].time - t) / trace.tau;
  return a * steps[k - 1].xi + (1.0 - a) * steps[k].xi;
}

// E*-variation of the piecewise-linear interpolant over [s, t]: the
// increment of interval k contributes in proportion to the overlap
double estar_variation_interp(const FlowTrace& trace, double s, double t) {
  double var = 0.0;
  for (size_t k = 1; k < trace.steps.size(); ++k) {
    const double a = trace.steps[k - 1].time;
    const double b = trace.steps[k].time;
    const double overlap = std::min(b, t) - std::max(a, s);
    if (overlap > 0.0) var += overlap * trace.steps[k].estar_increment;
  }
  return var;
}

}  // namespace

std::pair<WidthBody, DualFunctional> init_state(const Discretization& d,
                                                const WidthBody& body) {
  WidthBody g{project_odd(body.coeffs, true)};
  DualFunctional xi = duality_select(d, g.coeffs);
  return {g, xi};
}

FlowTrace run_flow(const Discretization& d, const WidthBody& body, double tau,
                   int n_steps) {
  if (tau <= 0.0) throw std::invalid_argument("run_flow: tau must be > 0");
  if (n_steps < 1) throw std::invalid_argument("run_flow: n_steps >= 1");

  FlowTrace trace;
  trace.tau = tau;
  auto [g0, xi0] = init_state(d, body);

  FlowStep st;
  st.k = 0;
  st.time = 0.0;
  st.g = g0.coeffs;
  st.xi = xi0.comps;
  st.norm_g = quotient_norm(d, g0.coeffs).value;
  st.dual_norm_xi = dual_norm(d, xi0);
  measure(d, st);
  trace.steps.push_back(st);
  if (st.norm_g < kHaltNorm) {
    trace.converged = true;
    return trace;
  }

  StepResult prev;
  bool have_prev = false;
  EStarResult estar_warm;
  bool have_estar_warm = false;
  try {
    for (int k = 1; k <= n_steps; ++k) {
      const DualFunctional xi_prev{trace.steps.back().xi};
      const WidthBody g_prev{trace.steps.back().g};
      StepResult r = solve_step(d, xi_prev, tau, g_prev,
                                have_prev ? &prev : nullptr);

      FlowStep cur;
      cur.k = k;
      cur.time = k * tau;
      cur.g = r.g_next.coeffs;
      cur.xi = r.xi_next.comps;
      cur.norm_g = r.norm_g;
      // duality: ||xi^k||* equals the minimax value of the step
      cur.dual_norm_xi = r.norm_g;
      cur.kkt_residual = r.kkt_residual;
      measure(d, cur);

      DualFunctional inc{((cur.xi - trace.steps.back().xi) / tau).eval()};
      EStarResult er =
          e_star(d, inc, have_estar_warm ? &estar_warm : nullptr);
      estar_warm = er;
      have_estar_warm = true;
      cur.estar_increment = er.value;
      cur.estar_cumvar =
          trace.steps.back().estar_cumvar + tau * er.value;

      trace.steps.push_back(cur);
      trace.steps.back().energy_slack = slack_prefix(trace.steps, tau, k);

      prev = r;
      have_prev = true;
      if (cur.norm_g < kHaltNorm) {
        trace.converged = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    throw FlowError(std::string("run_flow: step failed: ") + e.what(),
                    trace);
  }
  return trace;
}

double estar_variation(const FlowTrace& trace, int j, int k) {
  if (j < 0 || k >= static_cast<int>(trace.steps.size()) || j > k)
    throw std::invalid_argument("estar_variation: bad range");
  return trace.steps[k].estar_cumvar - trace.steps[j].estar_cumvar;
}

double energy_inequality_slack(const FlowTrace& trace, int j, int k) {
  if (j < 0 || k >= static_cast<int>(trace.steps.size()) || j > k)
    throw std::invalid_argument("energy_inequality_slack: bad range");
  double sum_E = 0.0;
  for (int l = j + 1; l <= k; ++l) sum_E += trace.tau * trace.steps[l].E;
  const double dnj = trace.steps[j].dual_norm_xi;
  const double dnk = trace.steps[k].dual_norm_xi;
  return 0.5 * dnj * dnj - 0.5 * dnk * dnk - estar_variation(trace, j, k) -
         sum_E;
}

InterpolantReport interpolant_diagnostics(const Discretization& d,
                                          const FlowTrace& trace, double T,
                                          int n_pairs,
                                          unsigned long long seed) {
  const auto& steps = trace.steps;
  const double t_end = steps.back().time;
  if (T > t_end + 1e-12)
    throw std::invalid_argument("interpolant_diagnostics: T beyond trace");
  InterpolantReport rep;

  // (i) int_0^T chi*(xi_tau - zeta_tau) dt.  On ((k-1)tau, k tau] the
  // difference is (xi^{k-1} - xi^k)(k tau - t)/tau, so chi* of it is linear
  // in t and vanishes at the right endpoint.
  const double pi3 = M_PI / 3.0;
  for (size_t k = 1; k < steps.size(); ++k) {
    const double a = steps[k - 1].time;
    if (a >= T) break;
    const double b = std::min(steps[k].time, T);
    DualFunctional diff{(steps[k - 1].xi - steps[k].xi).eval()};
    const double chi = chi_star(d, diff);  // value at the left endpoint
    const double tau = trace.tau;
    // integral of chi * (t_k - t)/tau over [a, b]
    const double tk = steps[k].time;
    rep.integral_chi +=
        chi / tau * 0.5 * ((tk - a) * (tk - a) - (tk - b) * (tk - b));
  }
  const double dn0 = steps[0].dual_norm_xi;
  rep.integral_bound =
      0.5 * trace.tau * (0.5 * dn0 * dn0 + pi3 * (T + trace.tau));

  // (ii) equicontinuity on sampled pairs
  std::mt19937_64 rng(seed);
  for (int p = 0; p < n_pairs; ++p) {
    double s = T * uniform(rng);
    double t = T * uniform(rng);
    if (s > t) std::swap(s, t);
    InterpolantPairCheck pc;
    pc.s = s;
    pc.t = t;
    DualFunctional diff{(xi_at(trace, t) - xi_at(trace, s)).eval()};
    pc.lhs = chi_star(d, diff);
    pc.bound = estar_variation_interp(trace, s, t) + pi3 * (t - s);
    rep.pairs.push_back(pc);
  }
  return rep;
}

TailReport tail_diagnostics(const FlowTrace& trace) {
  TailReport rep;
  const auto& steps = trace.steps;
  for (size_t k = 0; k < steps.size(); ++k) {
    const auto& st = steps[k];
    if (k > 0) {
      rep.max_violation_dual_norm =
          std::max(rep.max_violation_dual_norm,
                   st.dual_norm_xi - steps[k - 1].dual_norm_xi);
      rep.max_violation_energy =
          std::max(rep.max_violation_energy, st.E - steps[k - 1].E);
      rep.max_violation_R =
          std::max(rep.max_violation_R, st.R - steps[k - 1].R);
    }
    rep.max_R_identity_error =
        std::max(rep.max_R_identity_error,
                 std::abs(st.R - 0.5 - st.norm_g));
    const double tE = st.time * st.E;
    rep.max_tE = std::max(rep.max_tE, tE);
    rep.final_tE = tE;
  }
  return rep;
}

std::string trace_to_csv(const FlowTrace& trace) {
  std::string out =
      "step,time,R,r,V,sigma,E,norm_g,dual_norm_xi,estar_increment,"
      "estar_cumvar,energy_slack,convexity_margin,kkt_residual\n";
  for (const auto& st : trace.steps) {
    out += std::to_string(st.k);
    for (double v :
         {st.time, st.R, st.r, st.V, st.sigma, st.E, st.norm_g,
          st.dual_norm_xi, st.estar_increment, st.estar_cumvar,
          st.energy_slack, st.convexity_margin, st.kkt_residual}) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

FlowTrace trace_from_csv(const std::string& csv) {
  FlowTrace trace;
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line.rfind("step,time,", 0) != 0)
    throw std::invalid_argument("trace_from_csv: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 14)
      throw std::invalid_argument("trace_from_csv: bad row");
    FlowStep st;
    st.k = std::stoi(fields[0]);
    double* cols[] = {&st.time,           &st.R,
                      &st.r,              &st.V,
                      &st.sigma,          &st.E,
                      &st.norm_g,         &st.dual_norm_xi,
                      &st.estar_increment, &st.estar_cumvar,
                      &st.energy_slack,   &st.convexity_margin,
                      &st.kkt_residual};
    for (int i = 0; i < 13; ++i) *cols[i] = std::stod(fields[i + 1]);
    trace.steps.push_back(st);
  }
  if (trace.steps.size() >= 2)
    trace.tau = trace.steps[1].time - trace.steps[0].time;
  trace.converged =
      !trace.steps.empty() && trace.steps.back().norm_g < kHaltNorm;
  return trace;
}

}  // namespace widthflow
