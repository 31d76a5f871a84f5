#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpa/core/types.hpp"

namespace mpa::pipeline {

/// One generated sample before encoding.
struct SynthSample {
  std::string id;
  core::ImageTensor image;  // 256x256 grayscale
  core::BinaryMask mask;
};

/// Deterministic fixture: bright blobs with gently jittered boundaries on a
/// softly textured background, plus exact analytic masks. Blob centers stay
/// in the middle half of the frame and radii within 20..60 px so any two
/// samples remain within registration capture range.
std::vector<SynthSample> make_synthetic_samples(int n, uint32_t seed);

/// Writes `<out_dir>/images/<id>.png` and `<out_dir>/masks/<id>.png`.
/// Reproducible byte-for-byte from the seed.
void make_synthetic_dataset(int n, uint32_t seed, const std::string& out_dir);

}  // namespace mpa::pipeline
