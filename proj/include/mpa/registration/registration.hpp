#pragma once

#include <vector>

#include "mpa/core/types.hpp"
#include "mpa/registration/bspline.hpp"
#include "mpa/registration/field.hpp"

namespace mpa::registration {

struct RegistrationConfig {
  int levels = 3;
  double grid_spacing_finest = 32.0;
  double lambda_bend = 0.1;
  int iters_per_level = 200;
  double step0 = 1.0;
  double tol_rel = 1e-6;
};

struct ObjectiveResult {
  double value = 0.0;
  std::vector<double> grad_x;  // d value / d control dx, ny*nx
  std::vector<double> grad_y;
};

/// Mean squared intensity difference after warping `moving` by the grid's
/// field, plus lambda times the bending energy of the field. Both terms are
/// normalized by pixel count. Gradient is with respect to the control-point
/// displacements.
ObjectiveResult objective(const core::ImageTensor& fixed,
                          const core::ImageTensor& moving,
                          const ControlGrid& grid, double lambda_bend,
                          bool with_grad = true);

/// Estimates the deformation that maps fixed-image coordinates onto the
/// moving image (backward convention: warp(moving, field) aligns with
/// fixed). Multi-resolution gradient descent, deterministic.
DeformationField register_pair(const core::ImageTensor& moving,
                               const core::ImageTensor& fixed,
                               const RegistrationConfig& cfg);

/// Warps a binary support mask into query space as a soft mask in [0,1].
core::SoftMask propagate_mask(const core::BinaryMask& support_mask,
                              const DeformationField& field);

}  // namespace mpa::registration
