#include "mpa/segment/backend.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "mpa/core/hash.hpp"
#include "mpa/core/image_io.hpp"
#include "mpa/registration/field.hpp"

namespace mpa::segment {

namespace {

int round_clamped(float v, int extent) {
  return std::clamp(static_cast<int>(std::lround(v)), 0, extent - 1);
}

std::string refine_logits_path(const std::string& base, int round) {
  if (base.empty()) return {};
  const std::filesystem::path p(base);
  std::filesystem::path out = p.parent_path() / p.stem();
  out += ".r" + std::to_string(round);
  out += p.extension();
  return out.string();
}

}  // namespace

SegmentationResult mock_segment(const core::ImageTensor& image,
                                const prompt::PromptSet& prompts, float tol) {
  if (image.channels != 1) {
    throw std::invalid_argument("mock_segment: expected a grayscale image");
  }
  const int h = image.height;
  const int w = image.width;
  SegmentationResult result;
  result.mask = core::BinaryMask(h, w, 0);
  if (prompts.fallback_flag) return result;

  const core::Point* fg = nullptr;
  for (const core::Point& p : prompts.points) {
    if (p.label == core::Point::kForeground) fg = &p;
  }
  if (fg == nullptr) return result;

  const core::BBox box = prompts.box.clipped(w, h);
  std::set<size_t> blocked;
  for (const core::Point& p : prompts.points) {
    if (p.label != core::Point::kBackground) continue;
    blocked.insert(static_cast<size_t>(round_clamped(p.y, h)) * w +
                   round_clamped(p.x, w));
  }

  const int sx = round_clamped(fg->x, w);
  const int sy = round_clamped(fg->y, h);
  const size_t seed = static_cast<size_t>(sy) * w + sx;
  if (!box.contains(static_cast<float>(sx), static_cast<float>(sy)) ||
      blocked.count(seed)) {
    return result;
  }
  const float seed_val = image.data[seed];

  std::vector<size_t> stack = {seed};
  result.mask.data[seed] = 1;
  size_t grown = 1;
  while (!stack.empty()) {
    const size_t idx = stack.back();
    stack.pop_back();
    const int y = static_cast<int>(idx / w);
    const int x = static_cast<int>(idx % w);
    const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& n : nbr) {
      if (n[0] < box.x_min || n[0] > box.x_max || n[1] < box.y_min ||
          n[1] > box.y_max) {
        continue;
      }
      const size_t nidx = static_cast<size_t>(n[1]) * w + n[0];
      if (result.mask.data[nidx] || blocked.count(nidx)) continue;
      if (std::abs(image.data[nidx] - seed_val) > tol) continue;
      result.mask.data[nidx] = 1;
      stack.push_back(nidx);
      ++grown;
    }
  }
  result.confidence = std::clamp(
      static_cast<float>(grown) / static_cast<float>(box.area()), 0.0f, 1.0f);
  return result;
}

SegmentationResult MockSegmenter::segment(const SegmentationRequest& request) {
  return mock_segment(request.image, request.prompts, tol_);
}

ExternalSegmenter::ExternalSegmenter(const std::string& address,
                                     int timeout_ms, int max_in_flight)
    : wire_(open_channel(address), timeout_ms, max_in_flight) {
  const nlohmann::json hello = wire_.hello();
  if (hello.value("kind", "") != "segmenter") {
    throw BackendError("backend is not a segmenter: " + hello.dump());
  }
}

SegmentationResult ExternalSegmenter::segment(
    const SegmentationRequest& request) {
  if (request.image_path.empty()) {
    throw BackendError("external segmenter needs an image path");
  }
  nlohmann::json msg;
  msg["op"] = "segment";
  msg["id"] = wire_.next_id(request.sample_id);
  msg["image"] = request.image_path;
  auto& points = msg["points"] = nlohmann::json::array();
  for (const core::Point& p : request.prompts.points) {
    points.push_back({p.x, p.y, p.label});
  }
  msg["box"] = {request.prompts.box.x_min, request.prompts.box.y_min,
                request.prompts.box.x_max, request.prompts.box.y_max};
  if (request.logits_path.empty()) {
    msg["mask_logits"] = nullptr;
  } else {
    msg["mask_logits"] = request.logits_path;
  }

  const nlohmann::json reply = wire_.call(msg);
  if (reply.value("op", "") == "error") {
    throw BackendError(reply.value("message", "backend error"));
  }
  SegmentationResult result;
  result.mask = core::load_mask(reply.at("mask").get<std::string>());
  if (result.mask.height != request.image.height ||
      result.mask.width != request.image.width) {
    throw BackendError("backend mask dimensions do not match the image");
  }
  result.confidence = std::clamp(reply.value("confidence", 0.0f), 0.0f, 1.0f);
  return result;
}

std::string prompt_hash(const prompt::PromptSet& prompts) {
  core::Fnv1a hash;
  hash.update_value(prompts.fallback_flag);
  hash.update_value(prompts.box.x_min);
  hash.update_value(prompts.box.y_min);
  hash.update_value(prompts.box.x_max);
  hash.update_value(prompts.box.y_max);
  hash.update_value(static_cast<uint32_t>(prompts.points.size()));
  for (const core::Point& p : prompts.points) {
    hash.update_value(p.x);
    hash.update_value(p.y);
    hash.update_value(p.label);
  }
  hash.update_value(prompts.mask_logits.height);
  hash.update_value(prompts.mask_logits.width);
  hash.update(prompts.mask_logits.data.data(),
              prompts.mask_logits.data.size() * sizeof(float));
  return core::hex_digest(hash.digest());
}

SegmentationResult SegmenterClient::segment(const SegmentationRequest& request) {
  const std::string key = request.sample_id + "/" + prompt_hash(request.prompts);
  const auto hit = cache_.find(key);
  if (hit != cache_.end()) return hit->second;
  SegmentationResult result = backend_->segment(request);
  cache_[key] = result;
  return result;
}

SegmentationResult SegmenterClient::refine(const SegmentationRequest& request,
                                           const SegmentationResult& prev,
                                           int rounds, float soften_scale) {
  if (rounds < 0) throw std::invalid_argument("refine: negative round count");
  SegmentationResult result = prev;
  for (int r = 1; r <= rounds; ++r) {
    SegmentationRequest next = request;
    next.prompts.mask_logits = prompt::soften_mask(result.mask, soften_scale);
    next.logits_path = refine_logits_path(request.logits_path, r);
    if (!next.logits_path.empty()) {
      registration::save_scalar_grid(next.prompts.mask_logits,
                                     next.logits_path);
    }
    try {
      SegmentationResult refined = segment(next);
      refined.round = r;
      result = refined;
    } catch (const BackendError&) {
      result.warning = true;
      break;
    }
  }
  return result;
}

}  // namespace mpa::segment
