#pragma once

#include <string>
#include <vector>

#include "mpa/core/types.hpp"

namespace mpa::prompt {

/// Point/box/mask bundle handed to the segmentation backend.
struct PromptSet {
  std::vector<core::Point> points;  // exactly 1 foreground then 4 background
  core::BBox box;
  core::ScalarField mask_logits;
  bool fallback_flag = false;
};

/// Logit map scale * signed_distance(hard), clamped to [-20, 20]. The
/// sigmoid of the result crosses 0.5 at the mask boundary.
core::ScalarField soften_mask(const core::BinaryMask& hard, float scale = 0.5f);

/// Builds the prompt bundle from a coarse soft mask: threshold at 0.5, keep
/// the dominant component(s), centroid (or interior distance-transform
/// argmax for concave shapes) as the foreground point, expanded bounding box
/// with its four corners as background points, softened logits. An empty
/// thresholded mask yields a flagged central fallback instead of an error.
PromptSet generate_prompts(const core::SoftMask& coarse, int expand_margin = 0,
                           float soften_scale = 0.5f);

struct PromptFile {
  PromptSet prompts;
  std::string logits_ref;  // sidecar path as recorded in the JSON
};

/// JSON prompt file plus an MPAL logit sidecar. A relative logits_ref is
/// resolved against the JSON file's directory, both on save and load.
void save_prompts(const PromptSet& set, const std::string& json_path,
                  const std::string& logits_ref);
PromptFile load_prompts(const std::string& json_path);

}  // namespace mpa::prompt
