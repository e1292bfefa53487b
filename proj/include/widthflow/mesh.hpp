#pragma once

#include <string>

#include "widthflow/width_body.hpp"

namespace widthflow {

/// Triangulated boundary in Wavefront OBJ format (v/f records only).
/// Vertices are boundary points over a resolution x 2*resolution angular
/// lattice plus the two poles; faces are consistently outward-oriented.
void export_mesh(const Discretization& d, const WidthBody& body,
                 int resolution, const std::string& path);

}  // namespace widthflow
