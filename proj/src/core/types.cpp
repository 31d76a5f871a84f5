#include "mpa/core/types.hpp"

namespace mpa::core {

ImageTensor to_grayscale(const ImageTensor& img) {
  if (img.channels == 1) return img;
  ImageTensor out(img.height, img.width, 1);
  const float inv = 1.0f / static_cast<float>(img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float acc = 0.0f;
      for (int c = 0; c < img.channels; ++c) acc += img.at(y, x, c);
      out.at(y, x) = acc * inv;
    }
  }
  return out;
}

BinaryMask threshold(const SoftMask& soft, float t) {
  BinaryMask out(soft.height, soft.width);
  for (size_t i = 0; i < soft.data.size(); ++i)
    out.data[i] = soft.data[i] >= t ? 1 : 0;
  return out;
}

SoftMask mask_to_soft(const BinaryMask& mask) {
  SoftMask out(mask.height, mask.width);
  for (size_t i = 0; i < mask.data.size(); ++i)
    out.data[i] = static_cast<float>(mask.data[i]);
  return out;
}

}  // namespace mpa::core
