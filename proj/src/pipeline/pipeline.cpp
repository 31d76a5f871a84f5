#include "mpa/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>

#include "mpa/core/dataset.hpp"
#include "mpa/core/hash.hpp"
#include "mpa/core/image_io.hpp"
#include "mpa/core/mask_ops.hpp"
#include "mpa/embed/external.hpp"
#include "mpa/pipeline/parallel.hpp"
#include "mpa/prompt/prompt.hpp"
#include "mpa/registration/registration.hpp"
#include "mpa/segment/backend.hpp"
#include "mpa/select/selection.hpp"

namespace mpa::pipeline {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

struct LoadedSample {
  core::ImageTensor gray;
  std::optional<core::BinaryMask> mask;
};

std::string hash_dataset(const std::vector<core::SampleRecord>& samples) {
  core::Fnv1a hash;
  for (const core::SampleRecord& s : samples) {
    const std::string img = core::fnv1a_file_hex(s.image_path);
    hash.update(img.data(), img.size());
    if (s.mask_path) {
      const std::string msk = core::fnv1a_file_hex(*s.mask_path);
      hash.update(msk.data(), msk.size());
    }
  }
  return core::hex_digest(hash.digest());
}

}  // namespace

RunReport run(const PipelineConfig& cfg) {
  validate_config(cfg);
  if (cfg.dataset_root.empty()) throw ConfigError("dataset_root is required");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir is required");

  const auto t_run = Clock::now();
  const std::vector<core::SampleRecord> samples =
      core::list_dataset(cfg.dataset_root);
  const int n = static_cast<int>(samples.size());
  if (cfg.k >= n) {
    throw ConfigError("k = " + std::to_string(cfg.k) +
                      " must be smaller than the dataset size " +
                      std::to_string(n));
  }

  const fs::path out(cfg.output_dir);
  fs::create_directories(out / "fields");
  fs::create_directories(out / "coarse");
  fs::create_directories(out / "prompts");
  fs::create_directories(out / "predictions");

  std::map<std::string, size_t> index;
  std::vector<LoadedSample> data(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    index[samples[i].id] = i;
    data[i].gray = core::to_grayscale(
        core::load_image(samples[i].image_path, cfg.target_size));
    if (samples[i].mask_path) {
      data[i].mask = core::load_mask(*samples[i].mask_path, cfg.target_size);
    }
  }

  RunReport report;
  report.config = config_to_json(cfg);
  report.dataset_root = cfg.dataset_root;
  report.sample_count = n;
  report.dataset_hash = hash_dataset(samples);

  // Embedding + selection stage.
  const auto t_select = Clock::now();
  embed::EmbeddingCache cache;
  select::EmbeddingSet embeddings;
  if (cfg.embedding_backend == "toy") {
    cache.backend_tag = embed::kToyBackendTag;
    cache.dimension = embed::kToyDim;
    for (size_t i = 0; i < samples.size(); ++i) {
      embeddings.items.push_back(embed::embed_toy(data[i].gray, samples[i].id));
    }
  } else {
    embed::ExternalEmbedder embedder(cfg.embedding_backend,
                                     cfg.backend_timeout_ms);
    std::vector<std::pair<std::string, std::string>> id_paths;
    for (const core::SampleRecord& s : samples) {
      id_paths.emplace_back(s.id, s.image_path);
    }
    embeddings.items = embedder.embed_paths(id_paths);
    cache.backend_tag = embedder.tag();
    cache.dimension = static_cast<uint32_t>(embedder.dimension());
  }
  for (const embed::Embedding& e : embeddings.items) {
    cache.entries[e.sample_id] = e.vector;
  }
  embed::cache_write(cache, (out / "embeddings.mpae").string());

  const select::SelectionResult selection =
      cfg.toggles.es ? select::select_support(embeddings, cfg.k)
                     : select::select_first_k(embeddings, cfg.k);
  select::save_selection(selection, embeddings,
                         (out / "selection.json").string());
  report.selection_ms = ms_since(t_select);
  report.support_ids = selection.support_ids;

  for (const std::string& id : selection.support_ids) {
    if (!data[index.at(id)].mask) {
      throw std::runtime_error("support sample " + id + " has no mask");
    }
  }

  std::vector<size_t> queries;
  for (size_t i = 0; i < samples.size(); ++i) {
    const bool is_support =
        std::find(selection.support_ids.begin(), selection.support_ids.end(),
                  samples[i].id) != selection.support_ids.end();
    if (!is_support) queries.push_back(i);
  }

  std::shared_ptr<segment::SegmenterBackend> backend;
  if (cfg.segmentation_backend == "mock") {
    backend = std::make_shared<segment::MockSegmenter>(cfg.mock_tol);
  } else {
    backend = std::make_shared<segment::ExternalSegmenter>(
        cfg.segmentation_backend, cfg.backend_timeout_ms);
  }
  segment::SegmenterClient client(backend);

  report.records.resize(queries.size());
  run_parallel(queries.size(), cfg.workers, [&](size_t qi) {
    const size_t si = queries[qi];
    const std::string& id = samples[si].id;
    QueryRecord& rec = report.records[qi];
    rec.query_id = id;
    const auto t_query = Clock::now();
    try {
      rec.support_id = selection.assignment.at(id);
      const LoadedSample& support = data[index.at(rec.support_id)];
      const LoadedSample& query = data[si];

      const auto t_reg = Clock::now();
      const registration::DeformationField field = registration::register_pair(
          support.gray, query.gray, cfg.registration);
      rec.register_ms = ms_since(t_reg);
      registration::save_field(field,
                               (out / "fields" / (id + ".mpad")).string());

      const core::SoftMask coarse_soft =
          registration::propagate_mask(*support.mask, field);
      core::ScalarField coarse_grid(coarse_soft.height, coarse_soft.width);
      coarse_grid.data = coarse_soft.data;
      registration::save_scalar_grid(
          coarse_grid, (out / "coarse" / (id + ".mpal")).string());
      const core::BinaryMask coarse_hard = core::threshold(coarse_soft, 0.5f);
      if (query.mask) {
        rec.coarse_dice = core::dice(coarse_hard, *query.mask);
      }

      core::BinaryMask final_mask;
      if (cfg.toggles.pa) {
        const prompt::PromptSet prompts = prompt::generate_prompts(
            coarse_soft, cfg.prompt.expand_margin, cfg.prompt.soften_scale);
        rec.fallback = prompts.fallback_flag;
        const std::string logits_name = id + ".mpal";
        prompt::save_prompts(prompts,
                             (out / "prompts" / (id + ".json")).string(),
                             logits_name);

        segment::SegmentationRequest request;
        request.sample_id = id;
        request.image = query.gray;
        request.image_path = samples[si].image_path;
        request.prompts = prompts;
        request.logits_path = (out / "prompts" / logits_name).string();

        const auto t_seg = Clock::now();
        segment::SegmentationResult result = client.segment(request);
        const int rounds = cfg.toggles.pr ? cfg.refinement_rounds : 0;
        result = client.refine(request, result, rounds,
                               cfg.prompt.soften_scale);
        rec.segment_ms = ms_since(t_seg);
        rec.rounds = result.round;
        rec.warning = result.warning;
        final_mask = result.mask;
      } else {
        final_mask = coarse_hard;
      }
      core::save_mask(final_mask,
                      (out / "predictions" / (id + ".png")).string());
      if (query.mask) {
        rec.final_dice = core::dice(final_mask, *query.mask);
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.total_ms = ms_since(t_query);
  });

  report.total_ms = ms_since(t_run);
  save_report(report, (out / "report.json").string());
  save_report_csv(report, (out / "report.csv").string());
  return report;
}

EvalResult evaluate(const std::string& predictions_dir,
                    const std::string& truth_dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(truth_dir)) {
    throw std::runtime_error("not a directory: " + truth_dir);
  }
  for (const auto& entry : fs::directory_iterator(truth_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      ids.push_back(entry.path().stem().string());
    }
  }
  if (ids.empty()) {
    throw std::runtime_error("no ground-truth masks in " + truth_dir);
  }
  std::sort(ids.begin(), ids.end());

  EvalResult result;
  size_t matched = 0;
  for (const std::string& id : ids) {
    EvalRecord rec;
    rec.id = id;
    const fs::path pred = fs::path(predictions_dir) / (id + ".png");
    const core::BinaryMask truth =
        core::load_mask((fs::path(truth_dir) / (id + ".png")).string());
    if (!fs::is_regular_file(pred)) {
      rec.note = "missing";
    } else {
      const core::BinaryMask mask = core::load_mask(pred.string());
      if (mask.height != truth.height || mask.width != truth.width) {
        rec.note = "size mismatch";
      } else {
        rec.dice = core::dice(mask, truth);
        ++matched;
      }
    }
    result.records.push_back(std::move(rec));
  }
  if (matched == 0) {
    throw std::runtime_error("no prediction matches any ground-truth id in " +
                             predictions_dir);
  }
  double sum = 0.0;
  for (const EvalRecord& r : result.records) sum += r.dice;
  result.mean = sum / result.records.size();
  double var = 0.0;
  for (const EvalRecord& r : result.records) {
    var += (r.dice - result.mean) * (r.dice - result.mean);
  }
  result.stddev = std::sqrt(var / result.records.size());
  return result;
}

}  // namespace mpa::pipeline
