#pragma once

#include <string>
#include <vector>

#include "mpa/core/types.hpp"

namespace mpa::registration {

/// Dense per-pixel displacement on the fixed-image grid, pixel units.
/// Interleaved (u_x, u_y) pairs, row-major.
struct DeformationField {
  int height = 0;
  int width = 0;
  std::vector<float> u;  // 2 * height * width, (u_x, u_y) per pixel

  DeformationField() = default;
  DeformationField(int h, int w)
      : height(h), width(w), u(static_cast<size_t>(h) * w * 2, 0.0f) {}

  float& ux(int y, int x) { return u[(static_cast<size_t>(y) * width + x) * 2]; }
  float ux(int y, int x) const {
    return u[(static_cast<size_t>(y) * width + x) * 2];
  }
  float& uy(int y, int x) {
    return u[(static_cast<size_t>(y) * width + x) * 2 + 1];
  }
  float uy(int y, int x) const {
    return u[(static_cast<size_t>(y) * width + x) * 2 + 1];
  }
};

/// Field file: magic "MPAD", LE u32 version, u32 height, u32 width, then
/// H*W little-endian float32 (u_x, u_y) pairs, row-major.
void save_field(const DeformationField& field, const std::string& path);
DeformationField load_field(const std::string& path);

/// Single-channel float grid file, same layout as the deformation field with
/// one value per pixel and magic "MPAL". Used for mask-logit sidecars and
/// persisted soft masks.
void save_scalar_grid(const core::ScalarField& grid, const std::string& path);
core::ScalarField load_scalar_grid(const std::string& path);

}  // namespace mpa::registration
