#pragma once

#include "mpa/core/types.hpp"
#include "mpa/registration/field.hpp"

namespace mpa::registration {

/// Bilinear sample of channel c at continuous (x, y); coordinates are
/// clamped to the image rectangle before interpolation (edge replication).
float sample_bilinear(const core::ImageTensor& image, float x, float y, int c);
float sample_bilinear(const core::SoftMask& mask, float x, float y);

/// Backward warp: out(p) = in(p + u(p)). A zero field reproduces the input
/// exactly.
core::ImageTensor warp(const core::ImageTensor& image,
                       const DeformationField& field);
core::SoftMask warp(const core::SoftMask& mask, const DeformationField& field);

/// Warps a binary mask through its soft representation and rethresholds at
/// 0.5.
core::BinaryMask warp_mask(const core::BinaryMask& mask,
                           const DeformationField& field);

}  // namespace mpa::registration
