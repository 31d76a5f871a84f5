#pragma once

#include "mpa/core/types.hpp"

namespace mpa::core {

/// Dice coefficient 2|a n b| / (|a| + |b|). Both masks empty yields 1.0.
/// Throws on dimension mismatch.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Arithmetic mean of foreground pixel coordinates. Throws on empty mask.
Point centroid(const BinaryMask& mask);

/// Tight inclusive bounds of the foreground. Throws on empty mask.
BBox bounding_box(const BinaryMask& mask);

/// Connected-component cleanup: labels 4-connected foreground components and
/// keeps those with area strictly greater than 1% of the largest (the largest
/// itself always survives). Empty input passes through.
BinaryMask largest_component(const BinaryMask& mask);

/// Signed Euclidean distance to the mask boundary, positive inside and
/// negative outside. Distances are measured between pixel centers: a
/// foreground pixel carries +distance to the nearest background pixel
/// (pixels beyond the image border count as background), a background pixel
/// carries -distance to the nearest foreground pixel. Exact transform.
ScalarField signed_distance(const BinaryMask& mask);

}  // namespace mpa::core
