#include "mpa/registration/warp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpa::registration {

namespace {

struct BilinearTaps {
  int x0, x1, y0, y1;
  float fx, fy;
};

BilinearTaps taps(float x, float y, int width, int height) {
  x = std::clamp(x, 0.0f, static_cast<float>(width - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(height - 1));
  BilinearTaps t;
  t.x0 = static_cast<int>(std::floor(x));
  t.y0 = static_cast<int>(std::floor(y));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.fx = x - t.x0;
  t.fy = y - t.y0;
  return t;
}

void check_field(int height, int width, const DeformationField& field) {
  if (field.height != height || field.width != width) {
    throw std::invalid_argument("warp: field extent does not match input");
  }
}

}  // namespace

float sample_bilinear(const core::ImageTensor& image, float x, float y, int c) {
  const BilinearTaps t = taps(x, y, image.width, image.height);
  const float v00 = image.at(t.y0, t.x0, c);
  const float v01 = image.at(t.y0, t.x1, c);
  const float v10 = image.at(t.y1, t.x0, c);
  const float v11 = image.at(t.y1, t.x1, c);
  const float top = v00 + (v01 - v00) * t.fx;
  const float bot = v10 + (v11 - v10) * t.fx;
  return top + (bot - top) * t.fy;
}

float sample_bilinear(const core::SoftMask& mask, float x, float y) {
  const BilinearTaps t = taps(x, y, mask.width, mask.height);
  const float v00 = mask.data[static_cast<size_t>(t.y0) * mask.width + t.x0];
  const float v01 = mask.data[static_cast<size_t>(t.y0) * mask.width + t.x1];
  const float v10 = mask.data[static_cast<size_t>(t.y1) * mask.width + t.x0];
  const float v11 = mask.data[static_cast<size_t>(t.y1) * mask.width + t.x1];
  const float top = v00 + (v01 - v00) * t.fx;
  const float bot = v10 + (v11 - v10) * t.fx;
  return top + (bot - top) * t.fy;
}

core::ImageTensor warp(const core::ImageTensor& image,
                       const DeformationField& field) {
  check_field(image.height, image.width, field);
  core::ImageTensor out;
  out.height = image.height;
  out.width = image.width;
  out.channels = image.channels;
  out.data.resize(image.data.size());
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const float sx = x + field.ux(y, x);
      const float sy = y + field.uy(y, x);
      for (int c = 0; c < image.channels; ++c) {
        out.at(y, x, c) = sample_bilinear(image, sx, sy, c);
      }
    }
  }
  return out;
}

core::SoftMask warp(const core::SoftMask& mask, const DeformationField& field) {
  check_field(mask.height, mask.width, field);
  core::SoftMask out;
  out.height = mask.height;
  out.width = mask.width;
  out.data.resize(mask.data.size());
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      out.data[static_cast<size_t>(y) * mask.width + x] =
          sample_bilinear(mask, x + field.ux(y, x), y + field.uy(y, x));
    }
  }
  return out;
}

core::BinaryMask warp_mask(const core::BinaryMask& mask,
                           const DeformationField& field) {
  return core::threshold(warp(core::mask_to_soft(mask), field), 0.5f);
}

}  // namespace mpa::registration
