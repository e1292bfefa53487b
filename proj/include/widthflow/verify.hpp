#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "widthflow/flow.hpp"
#include "widthflow/mollifier.hpp"
#include "widthflow/width_body.hpp"

namespace widthflow {

/// One aggregated property check: pass iff value <= bound.  value is the
/// worst case observed over the suite and detail names the case attaining
/// it (enough to reproduce: the seed is always part of it).
struct PropertyResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  int count = 0;
  std::vector<PropertyResult> results;

  bool all_pass() const;
  std::string to_json() const;
};

/// count seeded random bodies (seeds seed .. seed+count-1) plus the zonal
/// Reuleaux body: width identity, r + R = 1, concentric in/circumcenter,
/// Jung bound, energy bound, width map, and the volume triple; also the
/// L = 81 zonal volume against the Monte-Carlo membership oracle.
SuiteReport verify_geometry(const Discretization& d, int count,
                            std::uint64_t seed);

/// count seeded random bodies: duality-formula residuals of the selected
/// xi, the chi* bound, and the Fenchel-Young residual at the E* argmax.
SuiteReport verify_duality(const Discretization& d, int count,
                           std::uint64_t seed);

/// count flow runs from seeded random bodies: per-step monotonicity,
/// cumulative E*-variation bound, energy-inequality slack on all (j, k),
/// convergence proxies, and both interpolant estimates (20 (s, t) pairs
/// per trace).
SuiteReport verify_flow(const Discretization& d, int count,
                        std::uint64_t seed, double tau = 0.05,
                        int n_steps = 200);

/// Kernel normalization across the epsilon ladder, then count seeded
/// (measure, body, epsilon) cases against the sqrt(2 eps) and
/// 4 sqrt(2 eps) bounds, plus the refinement check.
SuiteReport verify_mollifier(const Discretization& d, int count,
                             std::uint64_t seed);

}  // namespace widthflow
