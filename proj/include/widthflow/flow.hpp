#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "widthflow/convex_program.hpp"
#include "widthflow/width_body.hpp"

namespace widthflow {

/// One recorded state of the implicit scheme.  steps[0] is the initial
/// body; step k holds the state after k implicit steps, at time k*tau.
struct FlowStep {
  int k = 0;
  double time = 0.0;
  Eigen::VectorXd g;   // body coefficients
  Eigen::VectorXd xi;  // dual functional components
  double R = 0.0;
  double r = 0.0;
  double V = 0.0;
  double sigma = 0.0;
  double E = 0.0;
  double norm_g = 0.0;
  double dual_norm_xi = 0.0;
  double estar_increment = 0.0;  // E*((xi^k - xi^{k-1}) / tau), 0 at k = 0
  double estar_cumvar = 0.0;     // sum of tau * estar_increment up to k
  double energy_slack = 0.0;     // discrete energy-inequality slack, [0, k]
  double convexity_margin = 0.0;
  double kkt_residual = 0.0;
};

struct FlowTrace {
  double tau = 0.0;
  bool converged = false;  // halted because ||g^k|| < 1e-9
  std::vector<FlowStep> steps;
};

/// Thrown when a step fails mid-run; carries the trace recorded so far.
struct FlowError : std::runtime_error {
  FlowError(const std::string& what, FlowTrace partial)
      : std::runtime_error(what), trace(std::move(partial)) {}
  FlowTrace trace;
};

/// g^0 = body coefficients, xi^0 = duality_select(g^0).
std::pair<WidthBody, DualFunctional> init_state(const Discretization& d,
                                                const WidthBody& body);

/// Runs the implicit scheme for n_steps steps of size tau, recording every
/// diagnostic; halts early (converged = true) once ||g^k|| < 1e-9.
FlowTrace run_flow(const Discretization& d, const WidthBody& body, double tau,
                   int n_steps);

/// sum_{l = j+1..k} tau E*((xi^l - xi^{l-1}) / tau), from the cached
/// per-step increments.
double estar_variation(const FlowTrace& trace, int j, int k);

/// (1/2)||xi^j||*^2 - (1/2)||xi^k||*^2 - estar_variation(j, k)
/// - sum_{l = j+1..k} tau E(g^l); nonnegative up to solver accuracy.
double energy_inequality_slack(const FlowTrace& trace, int j, int k);

struct InterpolantPairCheck {
  double s = 0.0;
  double t = 0.0;
  double lhs = 0.0;    // chi*(xi_tau(t) - xi_tau(s))
  double bound = 0.0;  // E*V(xi_tau, s, t) + (pi/3)(t - s)
};

struct InterpolantReport {
  double integral_chi = 0.0;    // int_0^T chi*(xi_tau - zeta_tau) dt
  double integral_bound = 0.0;  // (tau/2)[(1/2)||xi^0||*^2 + (pi/3)(T+tau)]
  std::vector<InterpolantPairCheck> pairs;
};

/// Checks the two interpolant estimates: the L1 distance between the
/// piecewise-linear and piecewise-constant dual interpolants, and the
/// equicontinuity bound on n_pairs random (s, t) pairs in [0, T].
InterpolantReport interpolant_diagnostics(const Discretization& d,
                                          const FlowTrace& trace, double T,
                                          int n_pairs,
                                          unsigned long long seed);

struct TailReport {
  double max_violation_dual_norm = 0.0;  // worst increase of ||xi^k||*
  double max_violation_energy = 0.0;     // worst increase of E(g^k)
  double max_violation_R = 0.0;          // worst increase of R_k
  double max_R_identity_error = 0.0;     // max |R_k - 1/2 - ||g^k|||
  double max_tE = 0.0;
  double final_tE = 0.0;
};

TailReport tail_diagnostics(const FlowTrace& trace);

/// CSV serialization of the scalar columns; round-trips bit-exactly.
/// Body and dual vectors are snapshotted separately as JSON.
std::string trace_to_csv(const FlowTrace& trace);
FlowTrace trace_from_csv(const std::string& csv);

}  // namespace widthflow
