#pragma once

#include <string>

#include "mpa/core/types.hpp"

namespace mpa::core {

/// Thrown on unreadable, malformed, or unsupported image files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Loads an 8- or 16-bit PNG (grayscale or RGB), scales intensities to [0,1]
/// and bilinearly resizes to target_size x target_size. target_size == 0
/// keeps the native resolution. Grayscale input stays single-channel.
ImageTensor load_image(const std::string& path, int target_size = 256);

/// Loads a single-channel PNG as a binary mask: nearest-neighbor resize,
/// then pixel > 127 (8-bit scale) maps to 1, anything else to 0.
BinaryMask load_mask(const std::string& path, int target_size = 0);

/// Writes an image as 8-bit PNG (grayscale or RGB by channel count).
void save_image(const ImageTensor& img, const std::string& path);

/// Writes an image as 16-bit grayscale PNG (single-channel input only).
void save_image_16bit(const ImageTensor& img, const std::string& path);

/// Writes a mask as 8-bit grayscale PNG with values {0,255}.
void save_mask(const BinaryMask& mask, const std::string& path);

}  // namespace mpa::core
