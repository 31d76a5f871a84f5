#include "mpa/core/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpa::core {

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("dice: mask dimensions differ");
  size_t inter = 0, total = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    total += a.data[i] + b.data[i];
  }
  if (total == 0) return 1.0;  // both empty
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

Point centroid(const BinaryMask& mask) {
  double sx = 0.0, sy = 0.0;
  size_t n = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x)) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("centroid: empty mask");
  Point p;
  p.x = static_cast<float>(sx / n);
  p.y = static_cast<float>(sy / n);
  p.label = Point::kForeground;
  return p;
}

BBox bounding_box(const BinaryMask& mask) {
  BBox box{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  if (box.x_max < 0) throw std::invalid_argument("bounding_box: empty mask");
  return box;
}

BinaryMask largest_component(const BinaryMask& mask) {
  const int h = mask.height, w = mask.width;
  std::vector<int> label(static_cast<size_t>(h) * w, 0);
  std::vector<size_t> area;  // area[k] for label k+1
  int next = 0;

  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t idx = static_cast<size_t>(y) * w + x;
      if (!mask.data[idx] || label[idx]) continue;
      ++next;
      size_t count = 0;
      stack.push_back(static_cast<int>(idx));
      label[idx] = next;
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        ++count;
        int cy = cur / w, cx = cur % w;
        const int ny[4] = {cy - 1, cy + 1, cy, cy};
        const int nx[4] = {cx, cx, cx - 1, cx + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
          size_t nidx = static_cast<size_t>(ny[k]) * w + nx[k];
          if (mask.data[nidx] && !label[nidx]) {
            label[nidx] = next;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
      area.push_back(count);
    }
  }
  if (next == 0) return mask;  // empty input

  size_t largest = *std::max_element(area.begin(), area.end());
  // Keep components larger than 1% of the largest; equality is dropped so a
  // lone speckle against a 100-pixel blob is removed.
  double cutoff = 0.01 * static_cast<double>(largest);
  std::vector<uint8_t> keep(next + 1, 0);
  for (int k = 0; k < next; ++k)
    keep[k + 1] = static_cast<double>(area[k]) > cutoff ? 1 : 0;

  BinaryMask out(h, w);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = keep[label[i]];
  return out;
}

namespace {

// Large finite sentinel: true infinities make the envelope intersections
// inf - inf = NaN when two absent-site parabolas meet.
constexpr double kInf = 1e20;

// 1-D squared Euclidean distance transform (lower envelope of parabolas).
void dt1d(const double* f, int n, double* d, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      if (s <= z[k]) {  // k == 0: the new parabola dominates everywhere
        v[0] = q;
        z[0] = -kInf;
        z[1] = kInf;
        break;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// 2-D squared distance to the nearest site (cells where site(idx) != 0).
std::vector<double> edt_squared(const std::vector<uint8_t>& site, int h,
                                int w) {
  std::vector<double> grid(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < grid.size(); ++i) grid[i] = site[i] ? 0.0 : kInf;

  int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  for (int x = 0; x < w; ++x) {  // columns
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<size_t>(y) * w + x];
    dt1d(f.data(), h, d.data(), v.data(), z.data());
    for (int y = 0; y < h; ++y) grid[static_cast<size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {  // rows
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<size_t>(y) * w + x];
    dt1d(f.data(), w, d.data(), v.data(), z.data());
    for (int x = 0; x < w; ++x) grid[static_cast<size_t>(y) * w + x] = d[x];
  }
  return grid;
}

}  // namespace

ScalarField signed_distance(const BinaryMask& mask) {
  const int h = mask.height, w = mask.width;
  ScalarField out(h, w);

  // Distance of background pixels to the nearest foreground pixel.
  bool any_fg = false;
  for (uint8_t m : mask.data)
    if (m) {
      any_fg = true;
      break;
    }

  std::vector<double> to_fg;
  if (any_fg) to_fg = edt_squared(mask.data, h, w);

  // Distance of foreground pixels to the nearest background pixel, where the
  // plane beyond the image border is background. A one-pixel pad is enough:
  // the nearest outside point always lies in the first ring.
  const int ph = h + 2, pw = w + 2;
  std::vector<uint8_t> bg_sites(static_cast<size_t>(ph) * pw, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      bg_sites[static_cast<size_t>(y + 1) * pw + (x + 1)] =
          mask.at(y, x) ? 0 : 1;
  std::vector<double> to_bg = edt_squared(bg_sites, ph, pw);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(y, x)) {
        double d2 = to_bg[static_cast<size_t>(y + 1) * pw + (x + 1)];
        out.at(y, x) = static_cast<float>(std::sqrt(d2));
      } else {
        double d2 = any_fg ? to_fg[static_cast<size_t>(y) * w + x] : kInf;
        out.at(y, x) = any_fg
                           ? static_cast<float>(-std::sqrt(d2))
                           : -std::numeric_limits<float>::max();
      }
    }
  }
  return out;
}

}  // namespace mpa::core
