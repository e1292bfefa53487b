#include "widthflow/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace widthflow {

void export_mesh(const Discretization& d, const WidthBody& body,
                 int resolution, const std::string& path) {
  if (resolution < 2)
    throw std::invalid_argument("export_mesh: resolution must be >= 2");
  if (convexity_margin(d, body) < -1e-9)
    throw std::domain_error("export_mesh: body fails the convexity certificate");

  const double pi = std::numbers::pi;
  const int rows = resolution;
  const int cols = 2 * resolution;

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<size_t>(rows) * cols + 2);
  // interior latitude rings; poles handled separately
  for (int i = 0; i < rows; ++i) {
    const double theta = pi * (i + 1) / (rows + 1);
    for (int j = 0; j < cols; ++j) {
      const double phi = 2.0 * pi * j / cols;
      const Eigen::Vector3d u(std::sin(theta) * std::cos(phi),
                              std::sin(theta) * std::sin(phi),
                              std::cos(theta));
      verts.push_back(boundary_point(d, body, u));
    }
  }
  const int north = static_cast<int>(verts.size());
  verts.push_back(boundary_point(d, body, Eigen::Vector3d(0, 0, 1)));
  const int south = north + 1;
  verts.push_back(boundary_point(d, body, Eigen::Vector3d(0, 0, -1)));

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  char buf[128];
  for (const auto& v : verts) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    os << buf;
  }
  auto face = [&](int a, int b, int c) {
    // OBJ indices are 1-based; CCW as seen from outside
    os << "f " << a + 1 << ' ' << b + 1 << ' ' << c + 1 << '\n';
  };
  auto at = [&](int i, int j) { return i * cols + (j % cols); };
  // north fan: from the pole down to ring 0
  for (int j = 0; j < cols; ++j) face(north, at(0, j), at(0, j + 1));
  // quad strips between rings
  for (int i = 0; i + 1 < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      face(at(i, j), at(i + 1, j), at(i + 1, j + 1));
      face(at(i, j), at(i + 1, j + 1), at(i, j + 1));
    }
  // south fan
  for (int j = 0; j < cols; ++j)
    face(south, at(rows - 1, j + 1), at(rows - 1, j));
  if (!os) throw std::runtime_error("write failure on " + path);
}

}  // namespace widthflow
