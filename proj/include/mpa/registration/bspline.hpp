#pragma once

#include <array>
#include <vector>

#include "mpa/registration/field.hpp"

namespace mpa::registration {

/// Uniform cubic B-spline control lattice. Control point (i, j) sits at
/// pixel position ((i - 1) * spacing, (j - 1) * spacing): one margin
/// row/column on each side so the cubic support covers the whole image.
/// Displacements are kept in double precision during optimization; rendered
/// fields are float32.
struct ControlGrid {
  double spacing = 32.0;  // pixels between control points
  int nx = 0;             // control-point count along x
  int ny = 0;             // control-point count along y
  std::vector<double> dx;  // ny * nx, x-displacement per control point
  std::vector<double> dy;  // ny * nx, y-displacement per control point

  double& at_x(int j, int i) { return dx[static_cast<size_t>(j) * nx + i]; }
  double at_x(int j, int i) const { return dx[static_cast<size_t>(j) * nx + i]; }
  double& at_y(int j, int i) { return dy[static_cast<size_t>(j) * nx + i]; }
  double at_y(int j, int i) const { return dy[static_cast<size_t>(j) * nx + i]; }

  size_t point_count() const { return dx.size(); }
};

/// Builds a zero-displacement grid covering a height x width image.
ControlGrid make_control_grid(int height, int width, double spacing);

/// Cubic B-spline basis values at parameter t in [0,1):
/// B0=(1-t)^3/6, B1=(3t^3-6t^2+4)/6, B2=(-3t^3+3t^2+3t+1)/6, B3=t^3/6.
std::array<double, 4> bspline_weights(double t);

/// Per-axis sampling table: for each pixel coordinate, the first control
/// index and the four basis weights.
struct BasisTable {
  std::vector<int> first;                   // size = axis extent
  std::vector<std::array<double, 4>> weights;
};
BasisTable make_basis_table(int extent, double spacing, int control_count);

/// Renders the dense displacement implied by the grid. Throws if the grid
/// does not cover the requested extent.
DeformationField bspline_field(const ControlGrid& grid, int height, int width);

/// Double-precision render into caller buffers (size height*width each).
void render_displacement(const ControlGrid& grid, const BasisTable& tx,
                         const BasisTable& ty, std::vector<double>& ux,
                         std::vector<double>& uy);

}  // namespace mpa::registration
