#include "mpa/prompt/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "mpa/core/mask_ops.hpp"
#include "mpa/registration/field.hpp"

namespace mpa::prompt {

namespace {

constexpr float kLogitClamp = 20.0f;

void add_corner_points(PromptSet& set) {
  const core::BBox& b = set.box;
  const auto corner = [](int x, int y) {
    return core::Point{static_cast<float>(x), static_cast<float>(y),
                       core::Point::kBackground};
  };
  set.points.push_back(corner(b.x_min, b.y_min));
  set.points.push_back(corner(b.x_max, b.y_min));
  set.points.push_back(corner(b.x_min, b.y_max));
  set.points.push_back(corner(b.x_max, b.y_max));
}

PromptSet fallback_prompts(int height, int width) {
  PromptSet set;
  set.fallback_flag = true;
  set.points.push_back(core::Point{(width - 1) * 0.5f, (height - 1) * 0.5f,
                                   core::Point::kForeground});
  set.box = core::BBox{width / 4, height / 4, width / 4 + width / 2 - 1,
                       height / 4 + height / 2 - 1}
                .clipped(width, height);
  add_corner_points(set);
  set.mask_logits = core::ScalarField(height, width, 0.0f);
  return set;
}

core::Point interior_point(const core::BinaryMask& mask) {
  core::Point p = core::centroid(mask);
  const int px = static_cast<int>(std::lround(p.x));
  const int py = static_cast<int>(std::lround(p.y));
  if (px >= 0 && px < mask.width && py >= 0 && py < mask.height &&
      mask.at(py, px) == 1) {
    return p;
  }
  // Concave shape: centroid fell outside, take the deepest interior pixel.
  const core::ScalarField d = core::signed_distance(mask);
  int bx = 0, by = 0;
  float best = -std::numeric_limits<float>::infinity();
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (d.at(y, x) > best) {
        best = d.at(y, x);
        bx = x;
        by = y;
      }
    }
  }
  return core::Point{static_cast<float>(bx), static_cast<float>(by),
                     core::Point::kForeground};
}

}  // namespace

core::ScalarField soften_mask(const core::BinaryMask& hard, float scale) {
  core::ScalarField logits = core::signed_distance(hard);
  for (float& v : logits.data) {
    v = std::clamp(scale * v, -kLogitClamp, kLogitClamp);
  }
  return logits;
}

PromptSet generate_prompts(const core::SoftMask& coarse, int expand_margin,
                           float soften_scale) {
  const core::BinaryMask hard = core::threshold(coarse, 0.5f);
  const core::BinaryMask kept = core::largest_component(hard);
  if (kept.empty_mask()) {
    return fallback_prompts(coarse.height, coarse.width);
  }

  PromptSet set;
  set.points.push_back(interior_point(kept));
  core::BBox box = core::bounding_box(kept);
  box.x_min -= expand_margin;
  box.y_min -= expand_margin;
  box.x_max += expand_margin;
  box.y_max += expand_margin;
  set.box = box.clipped(coarse.width, coarse.height);
  add_corner_points(set);
  set.mask_logits = soften_mask(kept, soften_scale);
  return set;
}

void save_prompts(const PromptSet& set, const std::string& json_path,
                  const std::string& logits_ref) {
  namespace fs = std::filesystem;
  fs::path sidecar(logits_ref);
  if (sidecar.is_relative()) {
    sidecar = fs::path(json_path).parent_path() / sidecar;
  }
  registration::save_scalar_grid(set.mask_logits, sidecar.string());

  nlohmann::ordered_json doc;
  auto& points = doc["points"] = nlohmann::ordered_json::array();
  for (const core::Point& p : set.points) {
    points.push_back({p.x, p.y, p.label});
  }
  doc["box"] = {set.box.x_min, set.box.y_min, set.box.x_max, set.box.y_max};
  doc["mask_logits"] = logits_ref;
  doc["fallback_flag"] = set.fallback_flag;

  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + json_path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + json_path);
}

PromptFile load_prompts(const std::string& json_path) {
  namespace fs = std::filesystem;
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + json_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(json_path + ": " + e.what());
  }

  PromptFile file;
  for (const auto& p : doc.at("points")) {
    file.prompts.points.push_back(core::Point{
        p.at(0).get<float>(), p.at(1).get<float>(), p.at(2).get<int>()});
  }
  const auto& b = doc.at("box");
  file.prompts.box = core::BBox{b.at(0).get<int>(), b.at(1).get<int>(),
                                b.at(2).get<int>(), b.at(3).get<int>()};
  file.prompts.fallback_flag = doc.at("fallback_flag").get<bool>();
  file.logits_ref = doc.at("mask_logits").get<std::string>();

  fs::path sidecar(file.logits_ref);
  if (sidecar.is_relative()) {
    sidecar = fs::path(json_path).parent_path() / sidecar;
  }
  file.prompts.mask_logits = registration::load_scalar_grid(sidecar.string());
  return file;
}

}  // namespace mpa::prompt
