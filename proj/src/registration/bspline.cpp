#include "mpa/registration/bspline.hpp"

#include <cmath>
#include <stdexcept>

namespace mpa::registration {

ControlGrid make_control_grid(int height, int width, double spacing) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("control grid: empty image extent");
  }
  if (spacing <= 0.0) {
    throw std::invalid_argument("control grid: spacing must be positive");
  }
  ControlGrid grid;
  grid.spacing = spacing;
  grid.nx = static_cast<int>(std::floor((width - 1) / spacing)) + 4;
  grid.ny = static_cast<int>(std::floor((height - 1) / spacing)) + 4;
  grid.dx.assign(static_cast<size_t>(grid.nx) * grid.ny, 0.0);
  grid.dy.assign(static_cast<size_t>(grid.nx) * grid.ny, 0.0);
  return grid;
}

std::array<double, 4> bspline_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double omt = 1.0 - t;
  return {omt * omt * omt / 6.0,
          (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
          (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
          t3 / 6.0};
}

BasisTable make_basis_table(int extent, double spacing, int control_count) {
  BasisTable table;
  table.first.resize(extent);
  table.weights.resize(extent);
  for (int p = 0; p < extent; ++p) {
    const double s = p / spacing;
    int cell = static_cast<int>(std::floor(s));
    double t = s - cell;
    // Control point (i) sits at (i - 1) * spacing, so cell c uses controls
    // c .. c+3 in lattice indexing.
    if (cell + 3 >= control_count) {
      throw std::out_of_range("basis table: lattice does not cover extent");
    }
    table.first[p] = cell;
    table.weights[p] = bspline_weights(t);
  }
  return table;
}

void render_displacement(const ControlGrid& grid, const BasisTable& tx,
                         const BasisTable& ty, std::vector<double>& ux,
                         std::vector<double>& uy) {
  const int width = static_cast<int>(tx.first.size());
  const int height = static_cast<int>(ty.first.size());
  ux.assign(static_cast<size_t>(height) * width, 0.0);
  uy.assign(static_cast<size_t>(height) * width, 0.0);

  // Separable evaluation: contract rows of the lattice against the x basis,
  // then combine four contracted rows per pixel row.
  std::vector<double> row_x(static_cast<size_t>(grid.ny) * width);
  std::vector<double> row_y(static_cast<size_t>(grid.ny) * width);
  for (int j = 0; j < grid.ny; ++j) {
    const double* gx = grid.dx.data() + static_cast<size_t>(j) * grid.nx;
    const double* gy = grid.dy.data() + static_cast<size_t>(j) * grid.nx;
    double* rx = row_x.data() + static_cast<size_t>(j) * width;
    double* ry = row_y.data() + static_cast<size_t>(j) * width;
    for (int x = 0; x < width; ++x) {
      const int i0 = tx.first[x];
      const auto& w = tx.weights[x];
      rx[x] = w[0] * gx[i0] + w[1] * gx[i0 + 1] + w[2] * gx[i0 + 2] +
              w[3] * gx[i0 + 3];
      ry[x] = w[0] * gy[i0] + w[1] * gy[i0 + 1] + w[2] * gy[i0 + 2] +
              w[3] * gy[i0 + 3];
    }
  }
  for (int y = 0; y < height; ++y) {
    const int j0 = ty.first[y];
    const auto& w = ty.weights[y];
    double* out_x = ux.data() + static_cast<size_t>(y) * width;
    double* out_y = uy.data() + static_cast<size_t>(y) * width;
    for (int k = 0; k < 4; ++k) {
      const double wk = w[k];
      const double* rx = row_x.data() + static_cast<size_t>(j0 + k) * width;
      const double* ry = row_y.data() + static_cast<size_t>(j0 + k) * width;
      for (int x = 0; x < width; ++x) {
        out_x[x] += wk * rx[x];
        out_y[x] += wk * ry[x];
      }
    }
  }
}

DeformationField bspline_field(const ControlGrid& grid, int height, int width) {
  const BasisTable tx = make_basis_table(width, grid.spacing, grid.nx);
  const BasisTable ty = make_basis_table(height, grid.spacing, grid.ny);
  std::vector<double> ux;
  std::vector<double> uy;
  render_displacement(grid, tx, ty, ux, uy);

  DeformationField field;
  field.height = height;
  field.width = width;
  field.u.resize(static_cast<size_t>(height) * width * 2);
  for (size_t p = 0; p < ux.size(); ++p) {
    field.u[2 * p] = static_cast<float>(ux[p]);
    field.u[2 * p + 1] = static_cast<float>(uy[p]);
  }
  return field;
}

}  // namespace mpa::registration
