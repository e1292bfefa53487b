#include "widthflow/width_body.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "widthflow/convex_program.hpp"
#include "widthflow/simplex.hpp"

namespace widthflow {

namespace {

constexpr double kPi = std::numbers::pi;

double unit_uniform(std::mt19937_64& rng) {
  // explicit 53-bit mapping; uniform_real_distribution is not portable
  return (rng() >> 11) * 0x1.0p-53;
}

void check_unit(const Eigen::Vector3d& u) {
  if (std::abs(u.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("direction is not a unit vector");
}

void check_convex(const Discretization& d, const WidthBody& body,
                  const char* what) {
  if (convexity_margin(d, body) < -1e-9)
    throw std::domain_error(std::string(what) +
                            ": body fails the convexity certificate");
}

// minimax LP  min_t  |f_i - a.u_i| <= t ; returns (t*, a*, multipliers)
struct MinimaxResult {
  double value;
  Eigen::Vector3d a;
  Eigen::VectorXd lambda;  // signed node multipliers, sum |lambda| = 1
};

MinimaxResult centered_minimax(const SphereGrid& grid,
                               const Eigen::VectorXd& f) {
  const Eigen::Index n = grid.size();
  LpProblem lp;
  lp.A.resize(2 * n, 4);
  lp.b.resize(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    //  f_i - a.u_i - t <= 0
    lp.A.row(i) << -grid.nodes.row(i), -1.0;
    lp.b[i] = -f[i];
    //  a.u_i - f_i - t <= 0
    lp.A.row(n + i) << grid.nodes.row(i), -1.0;
    lp.b[n + i] = f[i];
  }
  lp.q.setZero(4);
  lp.q[3] = 1.0;
  LpSolution s = solve_lp(lp);
  if (!s.ok())
    throw std::runtime_error("minimax LP failed: " + s.message);
  MinimaxResult r;
  r.value = s.x[3];
  r.a = s.x.head<3>();
  r.lambda = s.y.head(n) - s.y.tail(n);
  return r;
}

}  // namespace

Eigen::VectorXd project_odd(const Eigen::VectorXd& c, bool zero_l1) {
  Eigen::VectorXd out = c;
  for (int a = 0; a < out.size(); ++a) {
    const int l = basis_degree(a);
    if (l % 2 == 0 || (zero_l1 && l == 1)) out[a] = 0.0;
  }
  return out;
}

WidthBody make_ball(int L) {
  return WidthBody{Eigen::VectorXd::Zero(basis_count(L))};
}

WidthBody make_body(const Discretization& d, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != d.basis.size())
    throw std::invalid_argument("make_body: coefficient size mismatch");
  for (int a = 0; a < coeffs.size(); ++a)
    if (basis_degree(a) % 2 == 0 && coeffs[a] != 0.0)
      throw std::invalid_argument(
          "make_body: even-degree coefficient breaks the width constraint");
  return WidthBody{coeffs};
}

Eigen::VectorXd node_values(const Discretization& d, const Eigen::VectorXd& c) {
  return d.table.val * c;
}

Eigen::VectorXd support_values(const Discretization& d, const WidthBody& body) {
  return (node_values(d, body.coeffs).array() + 0.5).matrix();
}

double evaluate_support(const Discretization& d, const WidthBody& body,
                        const Eigen::Vector3d& u) {
  check_unit(u);
  double h = 0.5;
  for (int a = 0; a < body.coeffs.size(); ++a)
    if (body.coeffs[a] != 0.0) h += body.coeffs[a] * d.basis.value(a, u);
  return h;
}

Eigen::Vector3d boundary_point(const Discretization& d, const WidthBody& body,
                               const Eigen::Vector3d& u) {
  check_unit(u);
  check_convex(d, body, "boundary_point");
  double h = 0.5;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (int a = 0; a < body.coeffs.size(); ++a) {
    const double c = body.coeffs[a];
    if (c == 0.0) continue;
    h += c * d.basis.value(a, u);
    grad += c * d.basis.euclidean_gradient(a, u);
  }
  grad -= u.dot(grad) * u;  // tangential part
  return grad + h * u;
}

Eigen::Matrix2d frame_matrix(const Discretization& d,
                             const Eigen::VectorXd& coeffs, Eigen::Index i) {
  const double h = 0.5 + d.table.val.row(i).dot(coeffs);
  Eigen::Matrix2d m;
  m(0, 0) = d.table.h11.row(i).dot(coeffs) + h;
  m(1, 1) = d.table.h22.row(i).dot(coeffs) + h;
  m(0, 1) = m(1, 0) = d.table.h12.row(i).dot(coeffs);
  return m;
}

double convexity_margin(const Discretization& d,
                        const Eigen::VectorXd& coeffs) {
  const Eigen::ArrayXd h = (d.table.val * coeffs).array() + 0.5;
  const Eigen::ArrayXd a11 = (d.table.h11 * coeffs).array() + h;
  const Eigen::ArrayXd a22 = (d.table.h22 * coeffs).array() + h;
  const Eigen::ArrayXd a12 = (d.table.h12 * coeffs).array();
  const Eigen::ArrayXd lmin =
      0.5 * (a11 + a22) -
      (0.25 * (a11 - a22).square() + a12.square()).sqrt();
  return lmin.minCoeff();
}

double convexity_margin(const Discretization& d, const WidthBody& body) {
  return convexity_margin(d, body.coeffs);
}

BallResult circumradius(const Discretization& d, const WidthBody& body) {
  MinimaxResult r = centered_minimax(d.grid, node_values(d, body.coeffs));
  return {0.5 + r.value, r.a};
}

BallResult inradius(const Discretization& d, const WidthBody& body) {
  // max s  s.t.  h_i - a.u_i >= s  (independent of the circumradius LP)
  const Eigen::VectorXd h = support_values(d, body);
  const Eigen::Index n = d.grid.size();
  LpProblem lp;
  lp.A.resize(n, 4);
  lp.b = h;
  for (Eigen::Index i = 0; i < n; ++i) lp.A.row(i) << d.grid.nodes.row(i), 1.0;
  lp.q.setZero(4);
  lp.q[3] = -1.0;
  LpSolution s = solve_lp(lp);
  if (!s.ok()) throw std::runtime_error("inradius LP failed: " + s.message);
  return {s.x[3], s.x.head<3>()};
}

double surface_area(const Discretization& d, const WidthBody& body) {
  check_convex(d, body, "surface_area");
  const Eigen::ArrayXd h = support_values(d, body).array();
  const Eigen::ArrayXd g1 = (d.table.g1 * body.coeffs).array();
  const Eigen::ArrayXd g2 = (d.table.g2 * body.coeffs).array();
  return (d.grid.weights.array() * (h.square() - 0.5 * (g1.square() + g2.square())))
      .sum();
}

double surface_area_det(const Discretization& d, const WidthBody& body) {
  check_convex(d, body, "surface_area_det");
  const Eigen::ArrayXd h = (d.table.val * body.coeffs).array() + 0.5;
  const Eigen::ArrayXd a11 = (d.table.h11 * body.coeffs).array() + h;
  const Eigen::ArrayXd a22 = (d.table.h22 * body.coeffs).array() + h;
  const Eigen::ArrayXd a12 = (d.table.h12 * body.coeffs).array();
  return (d.grid.weights.array() * (a11 * a22 - a12.square())).sum();
}

VolumeReport volume(const Discretization& d, const WidthBody& body) {
  check_convex(d, body, "volume");
  VolumeReport r;
  r.v_energy = kPi / 6.0 - 0.5 * energy(body.coeffs);
  r.v_blaschke = 0.5 * surface_area(d, body) - kPi / 3.0;
  const Eigen::ArrayXd h = (d.table.val * body.coeffs).array() + 0.5;
  const Eigen::ArrayXd a11 = (d.table.h11 * body.coeffs).array() + h;
  const Eigen::ArrayXd a22 = (d.table.h22 * body.coeffs).array() + h;
  const Eigen::ArrayXd a12 = (d.table.h12 * body.coeffs).array();
  r.v_det =
      (d.grid.weights.array() * h * (a11 * a22 - a12.square())).sum() / 3.0;
  r.max_discrepancy = std::max({std::abs(r.v_energy - r.v_blaschke),
                                std::abs(r.v_energy - r.v_det),
                                std::abs(r.v_blaschke - r.v_det)});
  if (r.max_discrepancy > 1e-5)
    throw std::runtime_error("volume: integration-consistency error");
  return r;
}

double hausdorff_distance(const Discretization& d, const WidthBody& b1,
                          const WidthBody& b2, bool quotient) {
  if (b1.coeffs.size() != b2.coeffs.size())
    throw std::invalid_argument("hausdorff_distance: degree mismatch");
  const Eigen::VectorXd diff = node_values(d, b1.coeffs - b2.coeffs);
  if (!quotient) return diff.cwiseAbs().maxCoeff();
  // min over a of max |diff + a.u|
  return centered_minimax(d.grid, -diff).value;
}

WidthBody shrink_to_feasible(const Discretization& d,
                             const Eigen::VectorXd& coeffs,
                             double target_margin) {
  if (target_margin < 0.0)
    throw std::invalid_argument("shrink_to_feasible: negative target");
  Eigen::VectorXd c = project_odd(coeffs, false);
  if (convexity_margin(d, c) >= target_margin) return WidthBody{c};
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (convexity_margin(d, mid * c) >= target_margin)
      lo = mid;
    else
      hi = mid;
  }
  return WidthBody{(lo * c).eval()};
}

double reuleaux2d_support(double d_rho, double d_z) {
  // vertices of the width-1 Reuleaux triangle, symmetry axis along z
  static const double root3 = std::sqrt(3.0);
  static const Eigen::Vector2d v[3] = {
      {0.0, 1.0 / root3}, {-0.5, -0.5 / root3}, {0.5, -0.5 / root3}};
  static const std::vector<Eigen::Vector2d> boundary = [] {
    std::vector<Eigen::Vector2d> pts;
    const int per_arc = 2048;
    for (int c = 0; c < 3; ++c) {
      const Eigen::Vector2d va = v[(c + 1) % 3] - v[c];
      const Eigen::Vector2d vb = v[(c + 2) % 3] - v[c];
      double a0 = std::atan2(va.y(), va.x());
      double a1 = std::atan2(vb.y(), vb.x());
      if (a1 < a0) std::swap(a0, a1);
      if (a1 - a0 > kPi) {
        // take the short way around
        std::swap(a0, a1);
        a1 += 2.0 * kPi;
      }
      for (int k = 0; k <= per_arc; ++k) {
        const double ang = a0 + (a1 - a0) * k / per_arc;
        pts.push_back(v[c] + Eigen::Vector2d(std::cos(ang), std::sin(ang)));
      }
    }
    return pts;
  }();
  double best = -1e300;
  for (const auto& p : boundary)
    best = std::max(best, p.x() * d_rho + p.y() * d_z);
  return best;
}

bool reuleaux2d_contains(double rho, double z) {
  static const double root3 = std::sqrt(3.0);
  static const Eigen::Vector2d v[3] = {
      {0.0, 1.0 / root3}, {-0.5, -0.5 / root3}, {0.5, -0.5 / root3}};
  const Eigen::Vector2d p(rho, z);
  for (const auto& c : v)
    if ((p - c).squaredNorm() > 1.0) return false;
  return true;
}

namespace {

// zonal harmonic Y_l0 and its two curvature-radius combinations at
// t = cos(theta), from the Legendre three-term recurrence
struct ZonalRow {
  double val;  // Y_l0
  double mer;  // Y'' + Y along the meridian
  double par;  // cot(theta) Y' + Y
};

ZonalRow zonal_row(int l, double t) {
  double pm1 = 1.0, p = t;
  for (int k = 2; k <= l; ++k) {
    const double pn = ((2.0 * k - 1.0) * t * p - (k - 1.0) * pm1) / k;
    pm1 = p;
    p = pn;
  }
  const double pl = p;
  const double plm1 = (l == 1) ? 1.0 : pm1;
  const double s2 = 1.0 - t * t;
  const double dp = (s2 > 1e-14) ? l * (plm1 - t * pl) / s2 : 0.0;
  const double n = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
  ZonalRow r;
  r.val = n * pl;
  r.mer = n * (t * dp - (l * (l + 1.0) - 1.0) * pl);
  r.par = n * (-t * dp + pl);
  return r;
}

}  // namespace

double zonal_margin(const Eigen::VectorXd& coeffs, int n_scan) {
  const int L = basis_degree(static_cast<int>(coeffs.size()) - 1);
  double worst = 0.5;
  for (int k = 0; k < n_scan; ++k) {
    const double th = 1e-5 + (kPi - 2e-5) * k / (n_scan - 1.0);
    const double t = std::cos(th);
    double mer = 0.5, par = 0.5;
    for (int l = 3; l <= L; l += 2) {
      const double c = coeffs[basis_index(l, 0)];
      if (c == 0.0) continue;
      const ZonalRow z = zonal_row(l, t);
      mer += c * z.mer;
      par += c * z.par;
    }
    worst = std::min({worst, mer, par});
  }
  return worst;
}

Eigen::VectorXd zonal_reuleaux_coeffs(int L) {
  if (L < 3) throw std::invalid_argument("zonal_reuleaux_coeffs: need L >= 3");
  std::vector<int> zl;
  for (int l = 3; l <= L; l += 2) zl.push_back(l);
  const int nl = static_cast<int>(zl.size());
  const int nth = std::max(2000, 70 * L);
  const int nv = nl + 2;  // coefficients, translation shift, sup value
  LpProblem lp;
  lp.A.setZero(4 * nth, nv);
  lp.b.resize(4 * nth);
  for (int k = 0; k < nth; ++k) {
    const double th = 0.0005 + (kPi - 0.001) * k / (nth - 1.0);
    const double t = std::cos(th);
    const double g_r = reuleaux2d_support(std::sin(th), t) - 0.5;
    for (int j = 0; j < nl; ++j) {
      const ZonalRow z = zonal_row(zl[j], t);
      // |g(th) + a cos(th) - g_R(th)| <= sup
      lp.A(4 * k, j) = z.val;
      lp.A(4 * k + 1, j) = -z.val;
      // both curvature radii >= 1e-6
      lp.A(4 * k + 2, j) = -z.mer;
      lp.A(4 * k + 3, j) = -z.par;
    }
    lp.A(4 * k, nl) = t;
    lp.A(4 * k + 1, nl) = -t;
    lp.A(4 * k, nl + 1) = -1.0;
    lp.A(4 * k + 1, nl + 1) = -1.0;
    lp.b[4 * k] = g_r;
    lp.b[4 * k + 1] = -g_r;
    lp.b[4 * k + 2] = 0.5 - 1e-6;
    lp.b[4 * k + 3] = 0.5 - 1e-6;
  }
  lp.q.setZero(nv);
  lp.q[nv - 1] = 1.0;
  LpSolution s = solve_lp(lp);
  if (!s.ok())
    throw std::runtime_error("zonal_reuleaux_coeffs: fit LP failed: " +
                             s.message);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_count(L));
  for (int j = 0; j < nl; ++j) c[basis_index(zl[j], 0)] = s.x[j];
  // between-sample curvature dips are removed by an affine shrink toward
  // the ball, certified by a fine scan
  const double m0 = zonal_margin(c, 50 * nth);
  if (m0 < 1e-9) {
    const double lambda = (0.5 - 1e-7) / (0.5 - std::min(m0, 0.0));
    c *= lambda;
  }
  return c;
}

WidthBody make_zonal_reuleaux(const Discretization& d) {
  return shrink_to_feasible(d, zonal_reuleaux_coeffs(d.basis.degree_max()),
                            1e-6);
}

WidthBody random_body(const Discretization& d, double amplitude,
                      std::uint64_t seed) {
  if (amplitude <= 0.0)
    throw std::invalid_argument("random_body: amplitude must be positive");
  std::mt19937_64 rng(seed);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d.basis.size());
  for (int l = 3; l <= d.basis.degree_max(); l += 2)
    for (int m = -l; m <= l; ++m)
      c[basis_index(l, m)] = amplitude * (2.0 * unit_uniform(rng) - 1.0);
  return shrink_to_feasible(d, c, 1e-6);
}

MonteCarloVolume reuleaux_volume_mc(long samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double half = 0.52, zlo = -0.45, zhi = 0.60;
  const double box = (2.0 * half) * (2.0 * half) * (zhi - zlo);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    const double x = half * (2.0 * unit_uniform(rng) - 1.0);
    const double y = half * (2.0 * unit_uniform(rng) - 1.0);
    const double z = zlo + (zhi - zlo) * unit_uniform(rng);
    if (reuleaux2d_contains(std::sqrt(x * x + y * y), z)) ++hits;
  }
  const double p = static_cast<double>(hits) / samples;
  MonteCarloVolume mc;
  mc.volume = box * p;
  mc.std_error = box * std::sqrt(p * (1.0 - p) / samples);
  mc.samples = samples;
  return mc;
}

std::string body_to_json(const WidthBody& body, const std::string& metadata) {
  std::ostringstream os;
  const int L = body.degree_max();
  os << "{\n  \"degree_max\": " << L << ",\n  \"coefficients\": [";
  bool first = true;
  char buf[64];
  for (int l = 1; l <= L; l += 2)
    for (int m = -l; m <= l; ++m) {
      std::snprintf(buf, sizeof buf, "%.17g",
                    body.coeffs[basis_index(l, m)]);
      os << (first ? "\n" : ",\n") << "    [" << l << ", " << m << ", " << buf
         << "]";
      first = false;
    }
  os << "\n  ]";
  if (!metadata.empty())
    os << ",\n  \"metadata\": " << nlohmann::json(metadata).dump();
  os << "\n}\n";
  return os.str();
}

WidthBody body_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const int L = j.at("degree_max").get<int>();
  if (L < 1 || L > 30) throw std::invalid_argument("body file: bad degree_max");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_count(L));
  for (const auto& triple : j.at("coefficients")) {
    const int l = triple.at(0).get<int>();
    const int m = triple.at(1).get<int>();
    if (l < 0 || l > L || std::abs(m) > l)
      throw std::invalid_argument("body file: index out of range");
    if (l % 2 == 0)
      throw std::invalid_argument("body file: even-degree coefficient");
    c[basis_index(l, m)] = triple.at(2).get<double>();
  }
  return WidthBody{c};
}

void save_body(const WidthBody& body, const std::string& path,
               const std::string& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << body_to_json(body, metadata);
}

WidthBody load_body(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return body_from_json(ss.str());
}

}  // namespace widthflow
