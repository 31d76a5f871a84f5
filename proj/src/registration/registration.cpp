#include "mpa/registration/registration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpa/core/resample.hpp"
#include "mpa/registration/warp.hpp"

namespace mpa::registration {

namespace {

std::vector<double> to_plane(const core::ImageTensor& image) {
  if (image.channels != 1) {
    throw std::invalid_argument("registration: expected a grayscale image");
  }
  return std::vector<double>(image.data.begin(), image.data.end());
}

struct Tap {
  double value;
  double dx;
  double dy;
};

/// Clamped bilinear sample of a double plane. Derivatives are with respect
/// to the unclamped coordinates, so they vanish where the clamp is active.
template <bool WithGrad>
Tap sample_plane(const std::vector<double>& img, int height, int width,
                 double sx, double sy) {
  const double cx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double v00 = img[static_cast<size_t>(y0) * width + x0];
  const double v01 = img[static_cast<size_t>(y0) * width + x1];
  const double v10 = img[static_cast<size_t>(y1) * width + x0];
  const double v11 = img[static_cast<size_t>(y1) * width + x1];
  Tap t;
  t.value = v00 + (v01 - v00) * fx + (v10 - v00) * fy +
            (v00 - v01 - v10 + v11) * fx * fy;
  if constexpr (WithGrad) {
    const bool in_x = sx > 0.0 && sx < width - 1;
    const bool in_y = sy > 0.0 && sy < height - 1;
    t.dx = in_x ? (v01 - v00) * (1.0 - fy) + (v11 - v10) * fy : 0.0;
    t.dy = in_y ? (v10 - v00) * (1.0 - fx) + (v11 - v01) * fx : 0.0;
  } else {
    t.dx = t.dy = 0.0;
  }
  return t;
}

/// Bending sum of one displacement component: sum of squared Dxx, Dyy and
/// 2*Dxy^2 over interior stencils. When grad is given, accumulates the
/// derivative of lambda/N * sum into it (c2 = 2*lambda/N).
template <bool WithGrad>
double bending_plane(const std::vector<double>& u, int height, int width,
                     double c2, std::vector<double>* grad) {
  double sum = 0.0;
  for (int y = 0; y < height; ++y) {
    const size_t row = static_cast<size_t>(y) * width;
    for (int x = 1; x + 1 < width; ++x) {
      const double t = u[row + x - 1] - 2.0 * u[row + x] + u[row + x + 1];
      sum += t * t;
      if constexpr (WithGrad) {
        const double a = c2 * t;
        (*grad)[row + x - 1] += a;
        (*grad)[row + x] -= 2.0 * a;
        (*grad)[row + x + 1] += a;
      }
    }
  }
  for (int y = 1; y + 1 < height; ++y) {
    const size_t row = static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      const double t =
          u[row - width + x] - 2.0 * u[row + x] + u[row + width + x];
      sum += t * t;
      if constexpr (WithGrad) {
        const double a = c2 * t;
        (*grad)[row - width + x] += a;
        (*grad)[row + x] -= 2.0 * a;
        (*grad)[row + width + x] += a;
      }
    }
  }
  for (int y = 1; y + 1 < height; ++y) {
    const size_t up = static_cast<size_t>(y - 1) * width;
    const size_t dn = static_cast<size_t>(y + 1) * width;
    for (int x = 1; x + 1 < width; ++x) {
      const double t = 0.25 * (u[dn + x + 1] - u[dn + x - 1] - u[up + x + 1] +
                               u[up + x - 1]);
      sum += 2.0 * t * t;
      if constexpr (WithGrad) {
        const double a = 0.5 * c2 * t;
        (*grad)[dn + x + 1] += a;
        (*grad)[dn + x - 1] -= a;
        (*grad)[up + x + 1] -= a;
        (*grad)[up + x - 1] += a;
      }
    }
  }
  return sum;
}

/// One resolution level: double-precision image planes plus the sampling
/// tables that tie the shared control lattice to this level's pixel grid.
struct Problem {
  int height = 0;
  int width = 0;
  std::vector<double> fixed;
  std::vector<double> moving;
  BasisTable tx, ty;
  double lambda = 0.0;

  mutable std::vector<double> ux, uy;      // rendered field
  mutable std::vector<double> gdx, gdy;    // dense objective gradient
  mutable std::vector<double> row_buffer;  // adjoint scratch

  /// Transpose of the separable field render: dense per-pixel gradient to
  /// per-control-point gradient.
  void scatter(const std::vector<double>& dense, int ny, int nx,
               std::vector<double>& ctrl) const {
    row_buffer.assign(static_cast<size_t>(ny) * width, 0.0);
    for (int y = 0; y < height; ++y) {
      const int j0 = ty.first[y];
      const auto& w = ty.weights[y];
      const double* g = dense.data() + static_cast<size_t>(y) * width;
      for (int k = 0; k < 4; ++k) {
        double* t = row_buffer.data() + static_cast<size_t>(j0 + k) * width;
        const double wk = w[k];
        for (int x = 0; x < width; ++x) t[x] += wk * g[x];
      }
    }
    ctrl.assign(static_cast<size_t>(ny) * nx, 0.0);
    for (int j = 0; j < ny; ++j) {
      const double* t = row_buffer.data() + static_cast<size_t>(j) * width;
      double* c = ctrl.data() + static_cast<size_t>(j) * nx;
      for (int x = 0; x < width; ++x) {
        const int i0 = tx.first[x];
        const auto& w = tx.weights[x];
        const double v = t[x];
        c[i0] += w[0] * v;
        c[i0 + 1] += w[1] * v;
        c[i0 + 2] += w[2] * v;
        c[i0 + 3] += w[3] * v;
      }
    }
  }

  template <bool WithGrad>
  double eval(const ControlGrid& grid, std::vector<double>* gx,
              std::vector<double>* gy) const {
    render_displacement(grid, tx, ty, ux, uy);
    const double inv_n = 1.0 / (static_cast<double>(height) * width);
    if constexpr (WithGrad) {
      gdx.assign(ux.size(), 0.0);
      gdy.assign(uy.size(), 0.0);
    }
    double sim = 0.0;
    for (int y = 0; y < height; ++y) {
      const size_t row = static_cast<size_t>(y) * width;
      for (int x = 0; x < width; ++x) {
        const size_t idx = row + x;
        const Tap t = sample_plane<WithGrad>(moving, height, width,
                                             x + ux[idx], y + uy[idx]);
        const double r = fixed[idx] - t.value;
        sim += r * r;
        if constexpr (WithGrad) {
          const double c = -2.0 * inv_n * r;
          gdx[idx] = c * t.dx;
          gdy[idx] = c * t.dy;
        }
      }
    }
    const double c2 = 2.0 * lambda * inv_n;
    double bend = 0.0;
    bend += bending_plane<WithGrad>(ux, height, width, c2,
                                    WithGrad ? &gdx : nullptr);
    bend += bending_plane<WithGrad>(uy, height, width, c2,
                                    WithGrad ? &gdy : nullptr);
    if constexpr (WithGrad) {
      scatter(gdx, grid.ny, grid.nx, *gx);
      scatter(gdy, grid.ny, grid.nx, *gy);
    }
    return inv_n * sim + lambda * inv_n * bend;
  }
};

void descend(const Problem& prob, ControlGrid& grid,
             const RegistrationConfig& cfg) {
  const size_t n = grid.point_count();
  std::vector<double> gx(n), gy(n);
  ControlGrid scratch = grid;
  std::vector<double> history;
  history.reserve(cfg.iters_per_level);

  for (int k = 0; k < cfg.iters_per_level; ++k) {
    double e_cur = prob.eval<true>(grid, &gx, &gy);
    double gmax = 0.0;
    for (size_t i = 0; i < n; ++i) {
      gmax = std::max(gmax, std::abs(gx[i]));
      gmax = std::max(gmax, std::abs(gy[i]));
    }
    if (!(gmax > 0.0)) break;

    double scale = cfg.step0 / (1.0 + k / 50.0) / gmax;
    bool accepted = false;
    for (int attempt = 0; attempt < 9; ++attempt) {
      for (size_t i = 0; i < n; ++i) {
        scratch.dx[i] = grid.dx[i] - scale * gx[i];
        scratch.dy[i] = grid.dy[i] - scale * gy[i];
      }
      const double e_new = prob.eval<false>(scratch, nullptr, nullptr);
      if (e_new < e_cur) {
        grid.dx.swap(scratch.dx);
        grid.dy.swap(scratch.dy);
        e_cur = e_new;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    history.push_back(e_cur);
    if (!accepted) break;
    const size_t m = history.size();
    if (m > 10) {
      const double past = history[m - 11];
      if (past <= 0.0) break;
      if ((past - e_cur) / past < cfg.tol_rel) break;
    }
  }
}

void validate_config(const RegistrationConfig& cfg) {
  if (cfg.levels < 1 || cfg.grid_spacing_finest <= 0.0 ||
      cfg.lambda_bend < 0.0 || cfg.iters_per_level < 0 || cfg.step0 <= 0.0 ||
      cfg.tol_rel <= 0.0) {
    throw std::invalid_argument("registration: invalid config");
  }
}

}  // namespace

ObjectiveResult objective(const core::ImageTensor& fixed,
                          const core::ImageTensor& moving,
                          const ControlGrid& grid, double lambda_bend,
                          bool with_grad) {
  if (fixed.height != moving.height || fixed.width != moving.width) {
    throw std::invalid_argument("objective: image size mismatch");
  }
  Problem prob;
  prob.height = fixed.height;
  prob.width = fixed.width;
  prob.fixed = to_plane(fixed);
  prob.moving = to_plane(moving);
  prob.tx = make_basis_table(prob.width, grid.spacing, grid.nx);
  prob.ty = make_basis_table(prob.height, grid.spacing, grid.ny);
  prob.lambda = lambda_bend;

  ObjectiveResult result;
  if (with_grad) {
    result.value = prob.eval<true>(grid, &result.grad_x, &result.grad_y);
  } else {
    result.value = prob.eval<false>(grid, nullptr, nullptr);
  }
  return result;
}

DeformationField register_pair(const core::ImageTensor& moving,
                               const core::ImageTensor& fixed,
                               const RegistrationConfig& cfg) {
  if (fixed.height != moving.height || fixed.width != moving.width) {
    throw std::invalid_argument("register: image size mismatch");
  }
  validate_config(cfg);

  ControlGrid grid =
      make_control_grid(fixed.height, fixed.width, cfg.grid_spacing_finest);
  for (int level = 0; level < cfg.levels; ++level) {
    const int factor = 1 << (cfg.levels - 1 - level);
    const int lh = (fixed.height + factor - 1) / factor;
    const int lw = (fixed.width + factor - 1) / factor;
    Problem prob;
    prob.height = lh;
    prob.width = lw;
    if (factor == 1) {
      prob.fixed = to_plane(fixed);
      prob.moving = to_plane(moving);
    } else {
      prob.fixed = to_plane(core::resize_area(fixed, lh, lw));
      prob.moving = to_plane(core::resize_area(moving, lh, lw));
    }
    const double level_spacing = cfg.grid_spacing_finest / factor;
    prob.tx = make_basis_table(lw, level_spacing, grid.nx);
    prob.ty = make_basis_table(lh, level_spacing, grid.ny);
    prob.lambda = cfg.lambda_bend;
    if (level > 0) {
      for (auto& v : grid.dx) v *= 2.0;
      for (auto& v : grid.dy) v *= 2.0;
    }
    descend(prob, grid, cfg);
  }
  return bspline_field(grid, fixed.height, fixed.width);
}

core::SoftMask propagate_mask(const core::BinaryMask& support_mask,
                              const DeformationField& field) {
  core::SoftMask soft = warp(core::mask_to_soft(support_mask), field);
  for (float& v : soft.data) v = std::clamp(v, 0.0f, 1.0f);
  return soft;
}

}  // namespace mpa::registration
