#pragma once

#include <map>
#include <memory>
#include <string>

#include "mpa/core/types.hpp"
#include "mpa/prompt/prompt.hpp"
#include "mpa/segment/wire.hpp"

namespace mpa::segment {

struct SegmentationRequest {
  std::string sample_id;
  core::ImageTensor image;    // grayscale, used by the mock and for checks
  std::string image_path;     // wire reference, required for external backends
  prompt::PromptSet prompts;
  std::string logits_path;    // persisted logit sidecar for the wire, may be empty
};

struct SegmentationResult {
  core::BinaryMask mask;
  float confidence = 0.0f;
  int round = 0;
  bool warning = false;  // a refinement round failed and was skipped
};

/// Deterministic stand-in for a promptable model: 4-connected region grow
/// from the foreground point over pixels within tol of the seed intensity,
/// intersected with the box and blocked at background points. A fallback
/// prompt yields an empty mask with confidence 0.
SegmentationResult mock_segment(const core::ImageTensor& image,
                                const prompt::PromptSet& prompts,
                                float tol = 0.1f);

class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual SegmentationResult segment(const SegmentationRequest& request) = 0;
};

class MockSegmenter : public SegmenterBackend {
 public:
  explicit MockSegmenter(float tol = 0.1f) : tol_(tol) {}
  SegmentationResult segment(const SegmentationRequest& request) override;

 private:
  float tol_;
};

/// Wire-protocol backend: address is "exec:<command>" or "tcp:<host>:<port>".
class ExternalSegmenter : public SegmenterBackend {
 public:
  explicit ExternalSegmenter(const std::string& address,
                             int timeout_ms = 120000, int max_in_flight = 4);
  SegmentationResult segment(const SegmentationRequest& request) override;

 private:
  WireClient wire_;
};

/// Front door for the pipeline: caches results per (sample_id, prompt hash)
/// and runs the mask-substitution refinement rounds.
class SegmenterClient {
 public:
  explicit SegmenterClient(std::shared_ptr<SegmenterBackend> backend)
      : backend_(std::move(backend)) {}

  SegmentationResult segment(const SegmentationRequest& request);

  /// Each round replaces the mask logits with soften_mask(previous result)
  /// and re-invokes segment; points and box stay fixed. A backend failure
  /// stops further rounds and marks the last good result.
  SegmentationResult refine(const SegmentationRequest& request,
                            const SegmentationResult& prev, int rounds = 1,
                            float soften_scale = 0.5f);

 private:
  std::shared_ptr<SegmenterBackend> backend_;
  std::map<std::string, SegmentationResult> cache_;
};

/// Content hash of a prompt bundle (cache key component).
std::string prompt_hash(const prompt::PromptSet& prompts);

}  // namespace mpa::segment
