#pragma once

#include <string>
#include <vector>

#include "mpa/pipeline/config.hpp"
#include "mpa/pipeline/report.hpp"

namespace mpa::pipeline {

/// Full run: selection, per-query registration/propagation/prompting/
/// segmentation, artifacts and report under cfg.output_dir. Per-query
/// failures become flagged records; setup failures throw.
RunReport run(const PipelineConfig& cfg);

struct EvalRecord {
  std::string id;
  double dice = 0.0;
  std::string note;  // empty, "missing", or "size mismatch"
};

struct EvalResult {
  std::vector<EvalRecord> records;  // one per ground-truth id, sorted
  double mean = 0.0;
  double stddev = 0.0;
};

/// Dice per ground-truth id against `<predictions_dir>/<id>.png`; missing or
/// mismatched predictions score 0 and are flagged.
EvalResult evaluate(const std::string& predictions_dir,
                    const std::string& truth_dir);

}  // namespace mpa::pipeline
