#include "mpa/pipeline/config.hpp"

#include <fstream>
#include <set>

namespace mpa::pipeline {

namespace {

void reject_unknown_keys(const nlohmann::json& obj,
                         const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

bool valid_backend(const std::string& value, const std::string& builtin) {
  return value == builtin || value.rfind("exec:", 0) == 0 ||
         value.rfind("tcp:", 0) == 0;
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("bad value for \"") + key + "\"");
    }
  }
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be an object");
  reject_unknown_keys(doc,
                      {"dataset_root", "output_dir", "k", "toggles",
                       "embedding_backend", "segmentation_backend",
                       "registration", "prompt", "refinement_rounds",
                       "workers", "mock_tol", "backend_timeout_ms",
                       "target_size"},
                      "config");

  PipelineConfig cfg;
  read_field(doc, "dataset_root", cfg.dataset_root);
  read_field(doc, "output_dir", cfg.output_dir);
  read_field(doc, "k", cfg.k);
  read_field(doc, "embedding_backend", cfg.embedding_backend);
  read_field(doc, "segmentation_backend", cfg.segmentation_backend);
  read_field(doc, "refinement_rounds", cfg.refinement_rounds);
  read_field(doc, "workers", cfg.workers);
  read_field(doc, "mock_tol", cfg.mock_tol);
  read_field(doc, "backend_timeout_ms", cfg.backend_timeout_ms);
  read_field(doc, "target_size", cfg.target_size);

  if (doc.contains("toggles")) {
    const auto& t = doc.at("toggles");
    reject_unknown_keys(t, {"es", "mp", "pa", "pr"}, "toggles");
    read_field(t, "es", cfg.toggles.es);
    read_field(t, "mp", cfg.toggles.mp);
    read_field(t, "pa", cfg.toggles.pa);
    read_field(t, "pr", cfg.toggles.pr);
  }
  if (doc.contains("registration")) {
    const auto& r = doc.at("registration");
    reject_unknown_keys(r,
                        {"levels", "grid_spacing_finest", "lambda_bend",
                         "iters_per_level", "step0", "tol_rel"},
                        "registration");
    read_field(r, "levels", cfg.registration.levels);
    read_field(r, "grid_spacing_finest", cfg.registration.grid_spacing_finest);
    read_field(r, "lambda_bend", cfg.registration.lambda_bend);
    read_field(r, "iters_per_level", cfg.registration.iters_per_level);
    read_field(r, "step0", cfg.registration.step0);
    read_field(r, "tol_rel", cfg.registration.tol_rel);
  }
  if (doc.contains("prompt")) {
    const auto& p = doc.at("prompt");
    reject_unknown_keys(p, {"expand_margin", "soften_scale"}, "prompt");
    read_field(p, "expand_margin", cfg.prompt.expand_margin);
    read_field(p, "soften_scale", cfg.prompt.soften_scale);
  }

  validate_config(cfg);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

void validate_config(const PipelineConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("k must be at least 1");
  if (!cfg.toggles.mp) {
    throw ConfigError("mask propagation (mp) cannot be disabled");
  }
  if (cfg.toggles.pr && !cfg.toggles.pa) {
    throw ConfigError("post refinement (pr) requires prompting (pa)");
  }
  if (!valid_backend(cfg.embedding_backend, "toy")) {
    throw ConfigError("embedding_backend must be toy, exec:... or tcp:...");
  }
  if (!valid_backend(cfg.segmentation_backend, "mock")) {
    throw ConfigError("segmentation_backend must be mock, exec:... or tcp:...");
  }
  if (cfg.refinement_rounds < 0) {
    throw ConfigError("refinement_rounds must be non-negative");
  }
  if (cfg.workers < 0) throw ConfigError("workers must be non-negative");
  if (cfg.mock_tol < 0.0f) throw ConfigError("mock_tol must be non-negative");
  if (cfg.backend_timeout_ms <= 0) {
    throw ConfigError("backend_timeout_ms must be positive");
  }
  if (cfg.target_size <= 0) throw ConfigError("target_size must be positive");
  const auto& r = cfg.registration;
  if (r.levels < 1 || r.grid_spacing_finest <= 0.0 || r.lambda_bend < 0.0 ||
      r.iters_per_level < 0 || r.step0 <= 0.0 || r.tol_rel <= 0.0) {
    throw ConfigError("invalid registration parameters");
  }
  if (cfg.prompt.expand_margin < 0) {
    throw ConfigError("expand_margin must be non-negative");
  }
  if (cfg.prompt.soften_scale <= 0.0f) {
    throw ConfigError("soften_scale must be positive");
  }
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["dataset_root"] = cfg.dataset_root;
  doc["output_dir"] = cfg.output_dir;
  doc["k"] = cfg.k;
  doc["toggles"] = {{"es", cfg.toggles.es},
                    {"mp", cfg.toggles.mp},
                    {"pa", cfg.toggles.pa},
                    {"pr", cfg.toggles.pr}};
  doc["embedding_backend"] = cfg.embedding_backend;
  doc["segmentation_backend"] = cfg.segmentation_backend;
  doc["registration"] = {{"levels", cfg.registration.levels},
                         {"grid_spacing_finest",
                          cfg.registration.grid_spacing_finest},
                         {"lambda_bend", cfg.registration.lambda_bend},
                         {"iters_per_level", cfg.registration.iters_per_level},
                         {"step0", cfg.registration.step0},
                         {"tol_rel", cfg.registration.tol_rel}};
  doc["prompt"] = {{"expand_margin", cfg.prompt.expand_margin},
                   {"soften_scale", cfg.prompt.soften_scale}};
  doc["refinement_rounds"] = cfg.refinement_rounds;
  doc["workers"] = cfg.workers;
  doc["mock_tol"] = cfg.mock_tol;
  doc["backend_timeout_ms"] = cfg.backend_timeout_ms;
  doc["target_size"] = cfg.target_size;
  return doc;
}

}  // namespace mpa::pipeline
