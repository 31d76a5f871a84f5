#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mpa/registration/registration.hpp"

namespace mpa::pipeline {

/// Raised for invalid configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Toggles {
  bool es = true;  // representative support selection
  bool mp = true;  // mask propagation via registration (mandatory)
  bool pa = true;  // prompt generation + backend segmentation
  bool pr = true;  // post refinement rounds
};

struct PromptConfig {
  int expand_margin = 0;
  float soften_scale = 0.5f;
};

struct PipelineConfig {
  std::string dataset_root;
  std::string output_dir;
  int k = 5;
  Toggles toggles;
  std::string embedding_backend = "toy";    // toy | exec:... | tcp:host:port
  std::string segmentation_backend = "mock";  // mock | exec:... | tcp:host:port
  registration::RegistrationConfig registration;
  PromptConfig prompt;
  int refinement_rounds = 1;
  int workers = 0;  // 0 = hardware concurrency
  float mock_tol = 0.1f;
  int backend_timeout_ms = 120000;
  int target_size = 256;
};

/// Parses and validates; unknown keys and broken toggle dependencies are
/// ConfigErrors.
PipelineConfig parse_config(const nlohmann::json& doc);
PipelineConfig load_config(const std::string& path);

/// Dependency and range checks shared by parse_config and the CLI.
void validate_config(const PipelineConfig& cfg);

/// Effective configuration echo for reports.
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

}  // namespace mpa::pipeline
