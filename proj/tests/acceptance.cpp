// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "widthflow/convex_program.hpp"
#include "widthflow/flow.hpp"
#include "widthflow/verify.hpp"

using namespace widthflow;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

bool g_all_pass = true;

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail = "") {
  g_all_pass = g_all_pass && pass;
  std::printf("criterion %2d (%s): %s [%.1f s]%s%s\n", id, name.c_str(),
              pass ? "PASS" : "FAIL", seconds,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
}

const PropertyResult& prop(const SuiteReport& rep, const std::string& name) {
  for (const auto& r : rep.results)
    if (r.name == name) return r;
  throw std::logic_error("missing property " + name);
}

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

int main() {
  const Discretization d = make_discretization(24, 48, 9);

  // 1: ball exactness
  {
    const double t0 = now_s();
    WidthBody ball = make_ball(9);
    const double R = circumradius(d, ball).radius;
    const double r = inradius(d, ball).radius;
    const double V = volume(d, ball).v_energy;
    const double sig = surface_area(d, ball);
    const double E = energy(ball.coeffs);
    const double t = now_s() - t0;
    const bool pass = std::abs(R - 0.5) < 1e-9 && std::abs(r - 0.5) < 1e-9 &&
                      std::abs(V - M_PI / 6.0) < 1e-9 &&
                      std::abs(sig - M_PI) < 1e-9 && std::abs(E) < 1e-9 &&
                      t < 1.0;
    report(1, "ball exactness", pass, t);
  }

  // 2 + 3: geometry and volume suites over 100 bodies + zonal Reuleaux
  {
    const double t0 = now_s();
    const SuiteReport geo = verify_geometry(d, 100, 1);
    const double t = now_s() - t0;
    const bool c2 = prop(geo, "width identity h(u)+h(-u)=1").pass &&
                    prop(geo, "r + R = 1").pass &&
                    prop(geo, "incenter = circumcenter").pass &&
                    prop(geo, "Jung bound R <= sqrt(3/8)").pass &&
                    prop(geo, "energy bound E <= pi/3").pass &&
                    prop(geo, "width map DH(u)-DH(-u)=u").pass && t < 60.0;
    report(2, "geometry suite", c2, t);
    const bool c3 = prop(geo, "|V_energy - V_blaschke|").pass &&
                    prop(geo, "|V_energy - V_det|").pass &&
                    prop(geo, "zonal reuleaux volume vs Monte-Carlo").pass &&
                    t < 120.0;
    report(3, "volume triple consistency", c3, t);
  }

  // 4: energy identity against quadrature, and the stability estimate
  {
    const double t0 = now_s();
    bool pass = true;
    const double c = 1.3;
    for (int l = 0; l <= 9; ++l)
      for (int m = -l; m <= l; ++m) {
        const int a = basis_index(l, m);
        double quad = 0.0;
        for (Eigen::Index i = 0; i < d.grid.size(); ++i) {
          const double v = c * d.table.val(i, a);
          const double gr1 = c * d.table.g1(i, a);
          const double gr2 = c * d.table.g2(i, a);
          quad +=
              d.grid.weights[i] * (0.5 * (gr1 * gr1 + gr2 * gr2) - v * v);
        }
        const double exact = (l * (l + 1) / 2.0 - 1.0) * c * c;
        pass = pass && std::abs(quad - exact) < 1e-10;
      }

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 500 && pass; ++trial) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(d.basis.size());
      for (int a = 1; a < d.basis.size(); ++a)  // zero mean: skip Y_00
        g[a] = 2.0 * uniform(rng) - 1.0;
      const Eigen::VectorXd gn = d.table.val * g;
      Eigen::Vector3d av = Eigen::Vector3d::Zero();
      for (Eigen::Index i = 0; i < d.grid.size(); ++i)
        av += d.grid.weights[i] * gn[i] * d.grid.nodes.row(i).transpose();
      av *= 3.0 / (4.0 * M_PI);
      double lhs = 0.0, rhs = 0.0;
      for (Eigen::Index i = 0; i < d.grid.size(); ++i) {
        const double centered = gn[i] - d.grid.nodes.row(i).dot(av);
        lhs += d.grid.weights[i] * centered * centered;
        const Eigen::VectorXd gr1 = d.table.g1.row(i) * g;
        const Eigen::VectorXd gr2 = d.table.g2.row(i) * g;
        rhs += d.grid.weights[i] *
               (gr1[0] * gr1[0] + gr2[0] * gr2[0] - 2.0 * gn[i] * gn[i]);
      }
      pass = pass && 4.0 * lhs <= rhs + 1e-9;
    }
    report(4, "energy identity and stability", pass, now_s() - t0);
  }

  // 5: duality suite over 100 bodies
  {
    const double t0 = now_s();
    const SuiteReport dua = verify_duality(d, 100, 1);
    const double t = now_s() - t0;
    report(5, "duality suite", dua.all_pass() && t < 300.0, t);
  }

  // 6 + 7 + 8: flow monotonicity, convergence proxies, interpolants (10 runs)
  {
    const double t0 = now_s();
    const SuiteReport flw = verify_flow(d, 10, 1);
    const double t = now_s() - t0;
    const bool c6 = prop(flw, "all flow runs complete").pass &&
                    prop(flw, "dual norm nonincreasing").pass &&
                    prop(flw, "energy nonincreasing").pass &&
                    prop(flw, "circumradius nonincreasing").pass &&
                    prop(flw, "volume nondecreasing").pass &&
                    prop(flw, "cumulative E*-variation <= ||xi0||*^2/2").pass &&
                    prop(flw, "energy-inequality slack >= 0, all (j,k)").pass &&
                    t < 1200.0;
    report(6, "flow monotonicity", c6, t);
    const bool c7 = prop(flw, "||g|| final / initial").pass &&
                    prop(flw, "circumradius nonincreasing").pass &&
                    prop(flw, "R - 1/2 = ||g|| identity").pass &&
                    prop(flw, "t E(g) final / running max").pass;
    report(7, "convergence proxy", c7, t);
    const bool c8 = prop(flw, "L1 interpolant estimate").pass &&
                    prop(flw, "equicontinuity estimate (20 pairs)").pass;
    report(8, "interpolant estimates", c8, t);
  }

  // 9: mollifier suite, 100 seeded cases
  {
    const double t0 = now_s();
    const SuiteReport mol = verify_mollifier(d, 100, 1);
    const double t = now_s() - t0;
    report(9, "mollifier suite", mol.all_pass() && t < 60.0, t);
  }

  // 10: tau-refinement sanity on the seed-7 body
  {
    const double t0 = now_s();
    WidthBody b = random_body(d, 0.05, 7);
    const FlowTrace coarse = run_flow(d, b, 0.05, 200);
    const FlowTrace fine = run_flow(d, b, 0.025, 400);
    const FlowStep& fc = coarse.steps.back();
    const FlowStep& ff = fine.steps.back();
    const double dR = std::abs(fc.R - ff.R);
    const double dV = std::abs(fc.V - ff.V);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "|dR| = %.3g, |dV| = %.3g", dR, dV);
    report(10, "tau-refinement sanity", dR < 1e-3 && dV < 1e-3,
           now_s() - t0, detail);
  }

  std::printf("%s\n", g_all_pass ? "ALL CRITERIA PASS" : "FAILURES PRESENT");
  return g_all_pass ? 0 : 1;
}
