#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpa::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct QueryRecord {
  std::string query_id;
  std::string support_id;
  std::optional<double> coarse_dice;  // absent without ground truth
  std::optional<double> final_dice;
  bool fallback = false;
  int rounds = 0;
  bool warning = false;
  std::string error;  // empty = success
  double register_ms = 0.0;
  double segment_ms = 0.0;
  double total_ms = 0.0;
};

struct Aggregates {
  int queries = 0;
  int failures = 0;
  int fallbacks = 0;
  std::optional<double> mean_coarse_dice;
  std::optional<double> std_coarse_dice;
  std::optional<double> mean_final_dice;
  std::optional<double> std_final_dice;
};

struct RunReport {
  std::string tool_version = kToolVersion;
  nlohmann::ordered_json config;
  std::string dataset_root;
  int sample_count = 0;
  std::string dataset_hash;
  std::vector<std::string> support_ids;
  std::vector<QueryRecord> records;  // ordered by query id
  double selection_ms = 0.0;
  double total_ms = 0.0;
};

/// Mean/std (population) over records that carry the respective Dice value;
/// failures are records with a non-empty error.
Aggregates aggregate(const std::vector<QueryRecord>& records);

nlohmann::ordered_json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

void save_report(const RunReport& report, const std::string& json_path);
RunReport load_report(const std::string& json_path);

/// Flat per-query table next to the JSON.
void save_report_csv(const RunReport& report, const std::string& csv_path);

/// Removes every "timings" object and per-record timing fields in place;
/// used to compare runs for determinism.
void strip_timings(nlohmann::ordered_json& doc);

}  // namespace mpa::pipeline
