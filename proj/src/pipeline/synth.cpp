#include "mpa/pipeline/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "mpa/core/image_io.hpp"

namespace mpa::pipeline {

namespace {

constexpr int kSize = 256;
constexpr double kPi = 3.14159265358979323846;

// mt19937 output is pinned by the standard; mapping to doubles here keeps
// the generator independent of library distribution implementations.
double uniform(std::mt19937& rng) {
  return rng() * (1.0 / 4294967296.0);
}

double uniform(std::mt19937& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform(rng);
}

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct BlobParams {
  double cx, cy, r0;
  double amp[3], phase[3];
  double contrast, bg_base;
  double tex_fx[3], tex_fy[3], tex_phase[3], tex_amp[3];
};

BlobParams draw_params(std::mt19937& rng) {
  BlobParams p;
  p.cx = uniform(rng, 104.0, 152.0);
  p.cy = uniform(rng, 104.0, 152.0);
  p.r0 = uniform(rng, 24.0, 44.0);
  for (int k = 0; k < 3; ++k) {
    p.amp[k] = uniform(rng, 0.0, 0.06);
    p.phase[k] = uniform(rng, 0.0, 2.0 * kPi);
  }
  p.contrast = uniform(rng, 0.35, 0.5);
  p.bg_base = uniform(rng, 0.2, 0.3);
  for (int k = 0; k < 3; ++k) {
    p.tex_fx[k] = uniform(rng, 0.5, 2.0) * (2.0 * kPi / kSize);
    p.tex_fy[k] = uniform(rng, 0.5, 2.0) * (2.0 * kPi / kSize);
    p.tex_phase[k] = uniform(rng, 0.0, 2.0 * kPi);
    p.tex_amp[k] = uniform(rng, 0.004, 0.012);
  }
  return p;
}

SynthSample render(const BlobParams& p, const std::string& id) {
  constexpr double kEdge = 0.75;   // half-width of the soft boundary band
  constexpr double kSkew = 0.276;  // puts a tol=0.1 cut at mid contrast on the mask boundary
  SynthSample s;
  s.id = id;
  s.image = core::ImageTensor(kSize, kSize, 1);
  s.mask = core::BinaryMask(kSize, kSize, 0);
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      const double dx = x - p.cx;
      const double dy = y - p.cy;
      const double d = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      double rb = p.r0;
      for (int k = 0; k < 3; ++k) {
        rb += p.r0 * p.amp[k] * std::cos((k + 1) * theta + p.phase[k]);
      }
      const double sdist = d - rb;
      const double g = smoothstep01((kEdge + kSkew - sdist) / (2.0 * kEdge));
      double tex = 0.0;
      for (int k = 0; k < 3; ++k) {
        tex += p.tex_amp[k] *
               std::sin(p.tex_fx[k] * x + p.tex_fy[k] * y + p.tex_phase[k]);
      }
      const double value =
          std::clamp(p.bg_base + tex + p.contrast * g, 0.0, 1.0);
      s.image.at(y, x) = static_cast<float>(value);
      if (sdist <= 0.0) s.mask.at(y, x) = 1;
    }
  }
  return s;
}

}  // namespace

std::vector<SynthSample> make_synthetic_samples(int n, uint32_t seed) {
  if (n < 2) throw std::invalid_argument("synthetic dataset needs n >= 2");
  std::mt19937 rng(seed);
  std::vector<SynthSample> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%03d", i);
    samples.push_back(render(draw_params(rng), id));
  }
  return samples;
}

void make_synthetic_dataset(int n, uint32_t seed, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  for (const SynthSample& s : make_synthetic_samples(n, seed)) {
    core::save_image(s.image, (root / "images" / (s.id + ".png")).string());
    core::save_mask(s.mask, (root / "masks" / (s.id + ".png")).string());
  }
}

}  // namespace mpa::pipeline
