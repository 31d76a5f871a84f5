#include "mpa/pipeline/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mpa::pipeline {

namespace {

void mean_std(const std::vector<double>& values, std::optional<double>& mean,
              std::optional<double>& stddev) {
  if (values.empty()) {
    mean.reset();
    stddev.reset();
    return;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mu = sum / values.size();
  double var = 0.0;
  for (double v : values) var += (v - mu) * (v - mu);
  mean = mu;
  stddev = std::sqrt(var / values.size());
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> optional_from(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

Aggregates aggregate(const std::vector<QueryRecord>& records) {
  Aggregates agg;
  agg.queries = static_cast<int>(records.size());
  std::vector<double> coarse, final_;
  for (const QueryRecord& r : records) {
    if (!r.error.empty()) ++agg.failures;
    if (r.fallback) ++agg.fallbacks;
    if (r.coarse_dice) coarse.push_back(*r.coarse_dice);
    if (r.final_dice) final_.push_back(*r.final_dice);
  }
  mean_std(coarse, agg.mean_coarse_dice, agg.std_coarse_dice);
  mean_std(final_, agg.mean_final_dice, agg.std_final_dice);
  return agg;
}

nlohmann::ordered_json report_to_json(const RunReport& report) {
  nlohmann::ordered_json doc;
  doc["tool_version"] = report.tool_version;
  doc["dataset"] = {{"root", report.dataset_root},
                    {"samples", report.sample_count},
                    {"hash", report.dataset_hash}};
  doc["config"] = report.config;
  doc["support_ids"] = report.support_ids;
  auto& records = doc["records"] = nlohmann::ordered_json::array();
  for (const QueryRecord& r : report.records) {
    nlohmann::ordered_json rec;
    rec["query_id"] = r.query_id;
    rec["support_id"] = r.support_id;
    rec["coarse_dice"] = optional_json(r.coarse_dice);
    rec["final_dice"] = optional_json(r.final_dice);
    rec["fallback"] = r.fallback;
    rec["rounds"] = r.rounds;
    rec["warning"] = r.warning;
    rec["error"] = r.error;
    rec["timings"] = {{"register_ms", r.register_ms},
                      {"segment_ms", r.segment_ms},
                      {"total_ms", r.total_ms}};
    records.push_back(std::move(rec));
  }
  const Aggregates agg = aggregate(report.records);
  doc["aggregates"] = {{"queries", agg.queries},
                       {"failures", agg.failures},
                       {"fallbacks", agg.fallbacks},
                       {"mean_coarse_dice", optional_json(agg.mean_coarse_dice)},
                       {"std_coarse_dice", optional_json(agg.std_coarse_dice)},
                       {"mean_final_dice", optional_json(agg.mean_final_dice)},
                       {"std_final_dice", optional_json(agg.std_final_dice)}};
  doc["timings"] = {{"selection_ms", report.selection_ms},
                    {"total_ms", report.total_ms}};
  return doc;
}

RunReport report_from_json(const nlohmann::json& doc) {
  RunReport report;
  report.tool_version = doc.at("tool_version").get<std::string>();
  report.dataset_root = doc.at("dataset").at("root").get<std::string>();
  report.sample_count = doc.at("dataset").at("samples").get<int>();
  report.dataset_hash = doc.at("dataset").at("hash").get<std::string>();
  report.config = doc.at("config");
  report.support_ids = doc.at("support_ids").get<std::vector<std::string>>();
  for (const auto& rec : doc.at("records")) {
    QueryRecord r;
    r.query_id = rec.at("query_id").get<std::string>();
    r.support_id = rec.at("support_id").get<std::string>();
    r.coarse_dice = optional_from(rec.at("coarse_dice"));
    r.final_dice = optional_from(rec.at("final_dice"));
    r.fallback = rec.at("fallback").get<bool>();
    r.rounds = rec.at("rounds").get<int>();
    r.warning = rec.at("warning").get<bool>();
    r.error = rec.at("error").get<std::string>();
    const auto& t = rec.at("timings");
    r.register_ms = t.at("register_ms").get<double>();
    r.segment_ms = t.at("segment_ms").get<double>();
    r.total_ms = t.at("total_ms").get<double>();
    report.records.push_back(std::move(r));
  }
  const auto& t = doc.at("timings");
  report.selection_ms = t.at("selection_ms").get<double>();
  report.total_ms = t.at("total_ms").get<double>();
  return report;
}

void save_report(const RunReport& report, const std::string& json_path) {
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + json_path);
  out << report_to_json(report).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + json_path);
}

RunReport load_report(const std::string& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + json_path);
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(json_path + ": " + e.what());
  }
  return report_from_json(doc);
}

void save_report_csv(const RunReport& report, const std::string& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << "query_id,support_id,coarse_dice,final_dice,fallback,rounds,warning,"
         "error\n";
  char buf[32];
  for (const QueryRecord& r : report.records) {
    out << csv_quote(r.query_id) << "," << csv_quote(r.support_id) << ",";
    if (r.coarse_dice) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.coarse_dice);
      out << buf;
    }
    out << ",";
    if (r.final_dice) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.final_dice);
      out << buf;
    }
    out << "," << (r.fallback ? 1 : 0) << "," << r.rounds << ","
        << (r.warning ? 1 : 0) << "," << csv_quote(r.error) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + csv_path);
}

void strip_timings(nlohmann::ordered_json& doc) {
  if (doc.is_object()) {
    doc.erase("timings");
    for (auto& item : doc.items()) strip_timings(item.value());
  } else if (doc.is_array()) {
    for (auto& item : doc) strip_timings(item);
  }
}

}  // namespace mpa::pipeline
