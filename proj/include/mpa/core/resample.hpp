#pragma once

#include "mpa/core/types.hpp"

namespace mpa::core {

/// Bilinear resize with corner-aligned sampling: output pixel (i) maps to
/// source coordinate i * (in - 1) / (out - 1). Identity when sizes match.
ImageTensor resize_bilinear(const ImageTensor& img, int out_height,
                            int out_width);

/// Nearest-neighbor resize using the same corner-aligned mapping; preserves
/// the input value set, so binary masks stay binary.
BinaryMask resize_nearest(const BinaryMask& mask, int out_height,
                          int out_width);

/// Area-weighted downsampling (box filter with fractional bin edges). Each
/// output cell averages the source interval [i*in/out, (i+1)*in/out) along
/// both axes. Exact block averaging when the sizes divide evenly.
ImageTensor resize_area(const ImageTensor& img, int out_height, int out_width);

}  // namespace mpa::core
