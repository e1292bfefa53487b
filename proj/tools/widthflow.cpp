#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "widthflow/flow.hpp"
#include "widthflow/mesh.hpp"
#include "widthflow/mollifier.hpp"
#include "widthflow/verify.hpp"

using namespace widthflow;

namespace {

// exit codes promised by the interface
constexpr int kOk = 0;
constexpr int kPropertyFailure = 1;
constexpr int kUsage = 2;
constexpr int kInfeasible = 3;
constexpr int kSolverFailure = 4;

struct Options {
  std::string config;
  std::string out = ".";
  std::string input;
  std::string kind = "random";
  std::string suite = "all";
  int n_theta = 24;
  int n_phi = 48;
  int degree_max = 9;
  int n_steps = 200;
  int count = 20;
  int snapshot_every = 10;
  int atoms = 6;
  int resolution = 64;
  double tau = 0.05;
  double amplitude = 0.05;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
};

// Registers the shared options on a subcommand and replays a JSON config
// file over them afterwards: flags win, unknown keys are rejected.
class Binder {
 public:
  Binder(CLI::App* sub, Options& o) : sub_(sub), o_(&o) {
    sub->add_option("--config", o.config, "JSON config file");
  }

  template <typename T>
  void bind(const std::string& key, T& ref, const std::string& desc) {
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    opts_[key] = sub_->add_option(flag, ref, desc);
    setters_[key] = [&ref](const nlohmann::json& v) { ref = v.get<T>(); };
  }

  void apply_config() const {
    if (o_->config.empty()) return;
    std::ifstream in(o_->config);
    if (!in) throw CLI::ValidationError("config", "cannot open " + o_->config);
    nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& [key, value] : j.items()) {
      auto it = setters_.find(key);
      if (it == setters_.end())
        throw CLI::ValidationError("config", "unknown key '" + key + "'");
      if (opts_.at(key)->count() == 0) it->second(value);
    }
  }

 private:
  CLI::App* sub_;
  Options* o_;
  std::map<std::string, CLI::Option*> opts_;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

void bind_grid(Binder& b, Options& o) {
  b.bind("n_theta", o.n_theta, "polar quadrature nodes");
  b.bind("n_phi", o.n_phi, "azimuthal nodes");
  b.bind("degree_max", o.degree_max, "harmonic degree cutoff L");
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/" + name, std::ios::binary);
  out << text;
}

WidthBody input_body(const Discretization& d, const Options& o) {
  if (!o.input.empty()) {
    if (!std::filesystem::exists(o.input))
      throw CLI::ValidationError("--input", "cannot open " + o.input);
    WidthBody b = load_body(o.input);
    if (b.degree_max() != d.basis.degree_max())
      throw std::invalid_argument("body degree does not match --degree-max");
    return b;
  }
  return random_body(d, o.amplitude, o.seed);
}

struct MeasureRow {
  const char* name;
  double value;
  double bound;
};

int cmd_gen(const Options& o) {
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  WidthBody b;
  if (o.kind == "ball")
    b = make_ball(o.degree_max);
  else if (o.kind == "zonal-reuleaux")
    b = make_zonal_reuleaux(d);
  else if (o.kind == "random")
    b = random_body(d, o.amplitude, o.seed);
  else
    throw CLI::ValidationError("--kind", "must be ball|zonal-reuleaux|random");

  const double margin = convexity_margin(d, b);
  if (margin < 0.0) throw std::invalid_argument("generated body infeasible");
  const BallResult cc = circumradius(d, b);
  const BallResult ic = inradius(d, b);
  const VolumeReport v = volume(d, b);
  char meta[128];
  std::snprintf(meta, sizeof(meta), "gen %s seed %llu L %d", o.kind.c_str(),
                static_cast<unsigned long long>(o.seed), o.degree_max);
  std::filesystem::create_directories(o.out);
  save_body(b, o.out + "/body.json", meta);
  std::printf("wrote %s/body.json\n", o.out.c_str());
  std::printf("R      = %.12g\n", cc.radius);
  std::printf("r      = %.12g\n", ic.radius);
  std::printf("V      = %.12g\n", v.v_energy);
  std::printf("E      = %.12g\n", energy(b.coeffs));
  std::printf("margin = %.12g\n", margin);
  return kOk;
}

int cmd_measure(const Options& o) {
  if (o.input.empty())
    throw CLI::ValidationError("--input", "body file required");
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  WidthBody b = input_body(d, o);

  const BallResult cc = circumradius(d, b);
  const BallResult ic = inradius(d, b);
  const VolumeReport v = volume(d, b);
  const double sigma = surface_area(d, b);
  const double E = energy(b.coeffs);
  const double norm_g = quotient_norm(d, b.coeffs).value;
  const double margin = convexity_margin(d, b);

  // width identity at a direction sample (identically true for odd g)
  double width_id = 0.0;
  for (Eigen::Index i = 0; i < d.grid.size(); i += 7) {
    const Eigen::Vector3d u = d.grid.nodes.row(i);
    width_id = std::max(width_id,
                        std::abs(evaluate_support(d, b, u) +
                                 evaluate_support(d, b, -u) - 1.0));
  }
  const MeasureRow checks[] = {
      {"width identity", width_id, 1e-12},
      {"r + R = 1", std::abs(cc.radius + ic.radius - 1.0), 1e-8},
      {"incenter = circumcenter", (cc.center - ic.center).norm(), 1e-7},
      {"Jung bound", cc.radius, std::sqrt(3.0 / 8.0) + 1e-6},
      {"energy bound", E, M_PI / 3.0 + 1e-8},
      {"volume consistency", v.max_discrepancy, 1e-5},
      {"convexity margin >= 0", -margin, 0.0},
  };

  std::printf("R        = %.12g\nr        = %.12g\n", cc.radius, ic.radius);
  std::printf("V_energy = %.12g\nV_blasch = %.12g\nV_det    = %.12g\n",
              v.v_energy, v.v_blaschke, v.v_det);
  std::printf("sigma    = %.12g\nE        = %.12g\n", sigma, E);
  std::printf("||g||    = %.12g\nmargin   = %.12g\n", norm_g, margin);
  bool ok = true;
  nlohmann::json j;
  j["R"] = cc.radius;
  j["r"] = ic.radius;
  j["V_energy"] = v.v_energy;
  j["V_blaschke"] = v.v_blaschke;
  j["V_det"] = v.v_det;
  j["sigma"] = sigma;
  j["E"] = E;
  j["norm_g"] = norm_g;
  j["margin"] = margin;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    const bool pass = c.value <= c.bound;
    ok = ok && pass;
    std::printf("[%s] %s (%.3g vs %.3g)\n", pass ? "pass" : "FAIL", c.name,
                c.value, c.bound);
    j["checks"].push_back({{"name", c.name},
                           {"pass", pass},
                           {"value", c.value},
                           {"bound", c.bound}});
  }
  write_file(o.out, "measure.json", j.dump(2) + "\n");
  return ok ? kOk : kPropertyFailure;
}

void write_flow_outputs(const Options& o, const Discretization& d,
                        const FlowTrace& tr, bool failed) {
  write_file(o.out, "trace.csv", trace_to_csv(tr));
  const int K = static_cast<int>(tr.steps.size()) - 1;
  for (int k = 0; k <= K; ++k) {
    if (k % std::max(o.snapshot_every, 1) != 0 && k != K) continue;
    char name[64];
    std::snprintf(name, sizeof(name), "body_%04d.json", k);
    WidthBody b{tr.steps[k].g};
    write_file(o.out, name, body_to_json(b, "flow snapshot"));
  }

  nlohmann::json j;
  j["tau"] = tr.tau;
  j["steps"] = K;
  j["converged"] = tr.converged;
  j["failed"] = failed;
  const TailReport tail = tail_diagnostics(tr);
  j["max_violation_dual_norm"] = tail.max_violation_dual_norm;
  j["max_violation_energy"] = tail.max_violation_energy;
  j["max_violation_R"] = tail.max_violation_R;
  j["max_R_identity_error"] = tail.max_R_identity_error;
  j["final_tE"] = tail.final_tE;
  j["max_tE"] = tail.max_tE;
  const double dn0 = tr.steps[0].dual_norm_xi;
  j["estar_cumvar"] = tr.steps[K].estar_cumvar;
  j["estar_cumvar_bound"] = 0.5 * dn0 * dn0;
  if (!failed && K >= 1) {
    const InterpolantReport ir =
        interpolant_diagnostics(d, tr, tr.steps[K].time, 20, o.seed);
    j["interpolant_l1"] = ir.integral_chi;
    j["interpolant_l1_bound"] = ir.integral_bound;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : ir.pairs)
      pairs.push_back(
          {{"s", p.s}, {"t", p.t}, {"lhs", p.lhs}, {"bound", p.bound}});
    j["equicontinuity_pairs"] = pairs;
  }
  write_file(o.out, "diagnostics.json", j.dump(2) + "\n");
}

int cmd_flow(const Options& o) {
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  WidthBody b = input_body(d, o);
  FlowTrace tr;
  try {
    tr = run_flow(d, b, o.tau, o.n_steps);
  } catch (const FlowError& e) {
    std::fprintf(stderr, "flow failed: %s\n", e.what());
    write_flow_outputs(o, d, e.trace, true);
    return kSolverFailure;
  }
  write_flow_outputs(o, d, tr, false);
  const int K = static_cast<int>(tr.steps.size()) - 1;
  std::printf("ran %d steps (tau %.12g), %s\n", K, tr.tau,
              tr.converged ? "converged" : "horizon reached");
  std::printf("R: %.12g -> %.12g\nV: %.12g -> %.12g\n", tr.steps[0].R,
              tr.steps[K].R, tr.steps[0].V, tr.steps[K].V);
  std::printf("wrote trace.csv, snapshots, diagnostics.json in %s\n",
              o.out.c_str());
  return kOk;
}

int cmd_verify(const Options& o) {
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  std::vector<SuiteReport> reports;
  const bool all = o.suite == "all";
  if (all || o.suite == "geometry")
    reports.push_back(verify_geometry(d, o.count, o.seed));
  if (all || o.suite == "duality")
    reports.push_back(verify_duality(d, o.count, o.seed));
  if (all || o.suite == "flow")
    reports.push_back(verify_flow(d, std::min(o.count, 10), o.seed, o.tau,
                                  o.n_steps));
  if (all || o.suite == "mollifier")
    reports.push_back(verify_mollifier(d, o.count, o.seed));
  if (reports.empty())
    throw CLI::ValidationError(
        "--suite", "must be geometry|duality|flow|mollifier|all");

  bool ok = true;
  nlohmann::json j;
  j["suites"] = nlohmann::json::array();
  for (const auto& r : reports) {
    ok = ok && r.all_pass();
    j["suites"].push_back(nlohmann::json::parse(r.to_json()));
  }
  j["pass"] = ok;
  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  write_file(o.out, "verify.json", text);
  return ok ? kOk : kPropertyFailure;
}

int cmd_export_mesh(const Options& o) {
  if (o.input.empty())
    throw CLI::ValidationError("--input", "body file required");
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  WidthBody b = input_body(d, o);
  if (convexity_margin(d, b) < 0.0)
    throw std::invalid_argument("body is not convex; mesh would self-intersect");
  std::filesystem::create_directories(o.out);
  export_mesh(d, b, o.resolution, o.out + "/body.obj");
  std::printf("wrote %s/body.obj\n", o.out.c_str());
  return kOk;
}

int cmd_mollify_demo(const Options& o) {
  const Discretization d =
      make_discretization(o.n_theta, o.n_phi, o.degree_max);
  DiscreteMeasure mu;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw CLI::ValidationError("--input", "cannot open " + o.input);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    mu = measure_from_json(text);
  } else {
    mu = random_measure(o.atoms, o.seed);
  }
  const CapKernel k = cap_kernel(o.epsilon);
  const MollifyResult res = mollify(mu, k, d.grid);
  WidthBody b = random_body(d, o.amplitude, o.seed + 1);
  const double err = mollify_error(d, mu, k, b);
  const double bound = 4.0 * std::sqrt(2.0 * o.epsilon) * mu.tv();

  std::printf("atoms            = %zu\n", mu.atoms.size());
  std::printf("tv               = %.12g\n", mu.tv());
  std::printf("epsilon          = %.12g\n", o.epsilon);
  std::printf("normalization    = %.12g\n", kernel_normalization_check(k));
  std::printf("a_eps            = (%.12g, %.12g, %.12g)\n", res.a_eps.x(),
              res.a_eps.y(), res.a_eps.z());
  std::printf("pairing error    = %.12g\n", err);
  std::printf("4 sqrt(2eps) tv  = %.12g\n", bound);
  nlohmann::json j;
  j["epsilon"] = o.epsilon;
  j["tv"] = mu.tv();
  j["a_eps"] = {res.a_eps.x(), res.a_eps.y(), res.a_eps.z()};
  j["pairing_error"] = err;
  j["bound"] = bound;
  write_file(o.out, "mollify.json", j.dump(2) + "\n");
  write_file(o.out, "measure.json", measure_to_json(mu));
  return err <= bound + 1e-7 ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical doubly monotone flow on constant-width bodies"};
  app.require_subcommand(1);
  Options o;

  CLI::App* gen = app.add_subcommand("gen", "generate a body file");
  Binder bg(gen, o);
  bind_grid(bg, o);
  bg.bind("kind", o.kind, "ball|zonal-reuleaux|random");
  bg.bind("seed", o.seed, "random seed");
  bg.bind("amplitude", o.amplitude, "random coefficient amplitude");
  bg.bind("out", o.out, "output directory");

  CLI::App* meas = app.add_subcommand("measure", "report body invariants");
  Binder bm(meas, o);
  bind_grid(bm, o);
  bm.bind("input", o.input, "body JSON file");
  bm.bind("out", o.out, "output directory");

  CLI::App* flow = app.add_subcommand("flow", "run the implicit scheme");
  Binder bf(flow, o);
  bind_grid(bf, o);
  bf.bind("input", o.input, "initial body file (random body if absent)");
  bf.bind("seed", o.seed, "seed for the random initial body");
  bf.bind("amplitude", o.amplitude, "random coefficient amplitude");
  bf.bind("tau", o.tau, "time step");
  bf.bind("n_steps", o.n_steps, "number of steps");
  bf.bind("snapshot_every", o.snapshot_every, "body snapshot cadence");
  bf.bind("out", o.out, "output directory");

  CLI::App* ver = app.add_subcommand("verify", "run property suites");
  Binder bv(ver, o);
  bind_grid(bv, o);
  bv.bind("suite", o.suite, "geometry|duality|flow|mollifier|all");
  bv.bind("count", o.count, "cases per suite (flow capped at 10)");
  bv.bind("seed", o.seed, "suite seed");
  bv.bind("tau", o.tau, "flow suite time step");
  bv.bind("n_steps", o.n_steps, "flow suite step budget");
  bv.bind("out", o.out, "output directory");

  CLI::App* mesh = app.add_subcommand("export-mesh", "write an OBJ surface");
  Binder bx(mesh, o);
  bind_grid(bx, o);
  bx.bind("input", o.input, "body JSON file");
  bx.bind("resolution", o.resolution, "angular mesh resolution");
  bx.bind("out", o.out, "output directory");

  CLI::App* mol = app.add_subcommand("mollify-demo", "cap-mollify a measure");
  Binder bd(mol, o);
  bind_grid(bd, o);
  bd.bind("input", o.input, "measure JSON file (random if absent)");
  bd.bind("seed", o.seed, "seed for the random measure");
  bd.bind("atoms", o.atoms, "atoms in the random measure");
  bd.bind("epsilon", o.epsilon, "cap width");
  bd.bind("amplitude", o.amplitude, "pairing test body amplitude");
  bd.bind("out", o.out, "output directory");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) bg.apply_config();
    if (meas->parsed()) bm.apply_config();
    if (flow->parsed()) bf.apply_config();
    if (ver->parsed()) bv.apply_config();
    if (mesh->parsed()) bx.apply_config();
    if (mol->parsed()) bd.apply_config();

    if (gen->parsed()) return cmd_gen(o);
    if (meas->parsed()) return cmd_measure(o);
    if (flow->parsed()) return cmd_flow(o);
    if (ver->parsed()) return cmd_verify(o);
    if (mesh->parsed()) return cmd_export_mesh(o);
    return cmd_mollify_demo(o);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kUsage;
  } catch (const FlowError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "infeasible input: %s\n", e.what());
    return kInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  }
}
