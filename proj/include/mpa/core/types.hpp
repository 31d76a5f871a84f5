#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpa::core {

/// Row-major H x W x C float32 intensity grid with values in [0,1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  size_t size() const { return data.size(); }

  bool valid() const {
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
      return false;
    if (data.size() != static_cast<size_t>(height) * width * channels)
      return false;
    for (float v : data)
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
    return true;
  }
};

/// Row-major H x W mask with values in {0,1}.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int h, int w, uint8_t fill = 0)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }

  size_t area() const {
    size_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
  }
  bool empty_mask() const { return area() == 0; }

  bool valid() const {
    if (height <= 0 || width <= 0) return false;
    if (data.size() != static_cast<size_t>(height) * width) return false;
    for (uint8_t v : data)
      if (v > 1) return false;
    return true;
  }

  bool operator==(const BinaryMask& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

/// Row-major H x W float32 mask with values in [0,1].
struct SoftMask {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  SoftMask() = default;
  SoftMask(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

  float& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }
};

/// Row-major H x W float32 grid with unrestricted values (signed distances,
/// logits).
struct ScalarField {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ScalarField() = default;
  ScalarField(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

  float& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }
};

/// Sub-pixel point prompt. x is the column coordinate, y the row coordinate,
/// origin at the top-left pixel center.
struct Point {
  static constexpr int kBackground = 0;
  static constexpr int kForeground = 1;

  float x = 0.0f;
  float y = 0.0f;
  int label = kForeground;
};

/// Inclusive integer pixel bounding box.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int box_width() const { return x_max - x_min + 1; }
  int box_height() const { return y_max - y_min + 1; }
  long area() const { return static_cast<long>(box_width()) * box_height(); }
  bool contains(float x, float y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  BBox clipped(int width, int height) const {
    BBox b = *this;
    b.x_min = std::max(0, b.x_min);
    b.y_min = std::max(0, b.y_min);
    b.x_max = std::min(width - 1, b.x_max);
    b.y_max = std::min(height - 1, b.y_max);
    return b;
  }
  bool operator==(const BBox& o) const {
    return x_min == o.x_min && y_min == o.y_min && x_max == o.x_max &&
           y_max == o.y_max;
  }
};

/// One dataset sample: a stable id, an image file, and an optional mask file.
struct SampleRecord {
  std::string id;
  std::string image_path;
  std::optional<std::string> mask_path;
};

/// Converts a 1- or 3-channel image to single-channel by averaging channels.
ImageTensor to_grayscale(const ImageTensor& img);

/// Thresholds a soft mask; values >= t become foreground.
BinaryMask threshold(const SoftMask& soft, float t = 0.5f);

/// Lifts a binary mask to a soft mask with values in {0,1}.
SoftMask mask_to_soft(const BinaryMask& mask);

}  // namespace mpa::core
