#include "mpa/core/resample.hpp"

#include <algorithm>
#include <cmath>

namespace mpa::core {

namespace {

// Corner-aligned source coordinate for output index i.
inline double src_coord(int i, int in_size, int out_size) {
  if (out_size <= 1) return 0.0;
  return static_cast<double>(i) * (in_size - 1) / (out_size - 1);
}

// Accumulates the contribution of source interval [lo, hi) into bins of an
// area-weighted 1-D resample. Returns (index, weight) pairs.
struct AreaBin {
  int first;                    // first source index
  std::vector<double> weights;  // weight per source index, sums to 1
};

std::vector<AreaBin> area_bins(int in_size, int out_size) {
  std::vector<AreaBin> bins(out_size);
  const double scale = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double lo = i * scale;
    double hi = (i + 1) * scale;
    int first = static_cast<int>(std::floor(lo));
    int last = static_cast<int>(std::ceil(hi)) - 1;
    first = std::clamp(first, 0, in_size - 1);
    last = std::clamp(last, first, in_size - 1);
    AreaBin bin;
    bin.first = first;
    bin.weights.resize(last - first + 1);
    double total = 0.0;
    for (int s = first; s <= last; ++s) {
      double cover = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      cover = std::max(cover, 0.0);
      bin.weights[s - first] = cover;
      total += cover;
    }
    for (double& w : bin.weights) w /= total;
    bins[i] = std::move(bin);
  }
  return bins;
}

}  // namespace

ImageTensor resize_bilinear(const ImageTensor& img, int out_height,
                            int out_width) {
  if (out_height == img.height && out_width == img.width) return img;
  ImageTensor out(out_height, out_width, img.channels);
  for (int y = 0; y < out_height; ++y) {
    double sy = src_coord(y, img.height, out_height);
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, img.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < out_width; ++x) {
      double sx = src_coord(x, img.width, out_width);
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, img.width - 1);
      double fx = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        double v00 = img.at(y0, x0, c);
        double v01 = img.at(y0, x1, c);
        double v10 = img.at(y1, x0, c);
        double v11 = img.at(y1, x1, c);
        double top = v00 * (1.0 - fx) + v01 * fx;
        double bot = v10 * (1.0 - fx) + v11 * fx;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - fy) + bot * fy);
      }
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_height,
                          int out_width) {
  if (out_height == mask.height && out_width == mask.width) return mask;
  BinaryMask out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    int sy = static_cast<int>(std::lround(src_coord(y, mask.height, out_height)));
    sy = std::clamp(sy, 0, mask.height - 1);
    for (int x = 0; x < out_width; ++x) {
      int sx = static_cast<int>(std::lround(src_coord(x, mask.width, out_width)));
      sx = std::clamp(sx, 0, mask.width - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

ImageTensor resize_area(const ImageTensor& img, int out_height,
                        int out_width) {
  if (out_height == img.height && out_width == img.width) return img;
  auto row_bins = area_bins(img.height, out_height);
  auto col_bins = area_bins(img.width, out_width);

  // Pass 1: collapse rows. Pass 2: collapse columns.
  ImageTensor rows(out_height, img.width, img.channels);
  for (int y = 0; y < out_height; ++y) {
    const AreaBin& rb = row_bins[y];
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (size_t k = 0; k < rb.weights.size(); ++k)
          acc += rb.weights[k] * img.at(rb.first + static_cast<int>(k), x, c);
        rows.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  ImageTensor out(out_height, out_width, img.channels);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const AreaBin& cb = col_bins[x];
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (size_t k = 0; k < cb.weights.size(); ++k)
          acc += cb.weights[k] * rows.at(y, cb.first + static_cast<int>(k), c);
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace mpa::core
