#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "mpa/core/dataset.hpp"
#include "mpa/core/image_io.hpp"
#include "mpa/core/mask_ops.hpp"
#include "mpa/embed/external.hpp"
#include "mpa/pipeline/pipeline.hpp"
#include "mpa/pipeline/synth.hpp"
#include "mpa/prompt/prompt.hpp"
#include "mpa/registration/registration.hpp"
#include "mpa/segment/backend.hpp"
#include "mpa/select/selection.hpp"

namespace fs = std::filesystem;

namespace {

bool g_verbose = false;

void note(const std::string& message) {
  if (g_verbose) std::cerr << "[mpa] " << message << "\n";
}

mpa::pipeline::PipelineConfig effective_config(const std::string& config_path,
                                               const std::string& output,
                                               int workers) {
  mpa::pipeline::PipelineConfig cfg;
  if (!config_path.empty()) cfg = mpa::pipeline::load_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  if (workers >= 0) cfg.workers = workers;
  return cfg;
}

void print_aggregates(const mpa::pipeline::RunReport& report) {
  const mpa::pipeline::Aggregates agg =
      mpa::pipeline::aggregate(report.records);
  std::printf("queries: %d  failures: %d  fallbacks: %d\n", agg.queries,
              agg.failures, agg.fallbacks);
  if (agg.mean_coarse_dice) {
    std::printf("coarse dice: %.4f +/- %.4f\n", *agg.mean_coarse_dice,
                *agg.std_coarse_dice);
  }
  if (agg.mean_final_dice) {
    std::printf("final dice:  %.4f +/- %.4f\n", *agg.mean_final_dice,
                *agg.std_final_dice);
  }
}

int dispatch(CLI::App& app, int argc, char** argv) {
  std::string config_path, output;
  int workers = -1;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--output", output, "output directory override");
  app.add_option("--workers", workers, "worker thread count override");
  app.add_flag("--verbose", g_verbose, "progress notes on stderr");
  app.fallthrough();
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "full selection-to-report run");

  auto* select_cmd =
      app.add_subcommand("select", "embed the dataset and pick the support set");

  auto* register_cmd =
      app.add_subcommand("register", "estimate a deformation field");
  std::string moving_path, fixed_path, field_out;
  int reg_size = 256;
  register_cmd->add_option("--moving", moving_path, "moving image PNG")
      ->required();
  register_cmd->add_option("--fixed", fixed_path, "fixed image PNG")
      ->required();
  register_cmd->add_option("--field-out", field_out, "output .mpad path")
      ->required();
  register_cmd->add_option("--size", reg_size, "working resolution");

  auto* propagate_cmd =
      app.add_subcommand("propagate", "warp a mask through a field");
  std::string prop_mask, prop_field, prop_out, prop_soft_out;
  propagate_cmd->add_option("--mask", prop_mask, "support mask PNG")
      ->required();
  propagate_cmd->add_option("--field", prop_field, "deformation .mpad")
      ->required();
  propagate_cmd->add_option("--out", prop_out, "hard coarse mask PNG")
      ->required();
  propagate_cmd->add_option("--soft-out", prop_soft_out,
                            "optional soft mask .mpal");

  auto* prompt_cmd =
      app.add_subcommand("prompt", "build prompts from a coarse mask");
  std::string prompt_coarse, prompt_json;
  int prompt_margin = 0;
  float prompt_scale = 0.5f;
  prompt_cmd->add_option("--coarse", prompt_coarse, "coarse soft mask .mpal")
      ->required();
  prompt_cmd->add_option("--json-out", prompt_json, "output prompt JSON")
      ->required();
  prompt_cmd->add_option("--margin", prompt_margin, "box expansion in px");
  prompt_cmd->add_option("--scale", prompt_scale, "soften scale per px");

  auto* segment_cmd =
      app.add_subcommand("segment", "run one image through a backend");
  std::string seg_image, seg_prompts, seg_out, seg_backend = "mock";
  float seg_tol = 0.1f;
  int seg_size = 256;
  segment_cmd->add_option("--image", seg_image, "query image PNG")->required();
  segment_cmd->add_option("--prompts", seg_prompts, "prompt JSON")->required();
  segment_cmd->add_option("--out", seg_out, "prediction PNG")->required();
  segment_cmd->add_option("--backend", seg_backend,
                          "mock, exec:<cmd> or tcp:<host>:<port>");
  segment_cmd->add_option("--tol", seg_tol, "mock intensity tolerance");
  segment_cmd->add_option("--size", seg_size, "working resolution");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Dice against a truth dir");
  std::string eval_pred, eval_truth, eval_json;
  evaluate_cmd->add_option("--predictions", eval_pred, "predictions dir")
      ->required();
  evaluate_cmd->add_option("--truth", eval_truth, "ground-truth dir")
      ->required();
  evaluate_cmd->add_option("--json-out", eval_json, "optional metrics JSON");

  auto* synth_cmd = app.add_subcommand("synth", "generate the blob fixture");
  int synth_n = 30;
  unsigned synth_seed = 7;
  synth_cmd->add_option("--count", synth_n, "sample count");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");

  app.parse(argc, argv);

  if (run_cmd->parsed()) {
    if (config_path.empty()) {
      throw mpa::pipeline::ConfigError("run needs --config");
    }
    const auto cfg = effective_config(config_path, output, workers);
    note("running pipeline on " + cfg.dataset_root);
    const auto report = mpa::pipeline::run(cfg);
    print_aggregates(report);
    std::printf("report: %s\n",
                (fs::path(cfg.output_dir) / "report.json").string().c_str());
    return 0;
  }

  if (select_cmd->parsed()) {
    if (config_path.empty()) {
      throw mpa::pipeline::ConfigError("select needs --config");
    }
    auto cfg = effective_config(config_path, output, workers);
    if (cfg.output_dir.empty()) {
      throw mpa::pipeline::ConfigError("select needs an output directory");
    }
    fs::create_directories(cfg.output_dir);
    const auto samples = mpa::core::list_dataset(cfg.dataset_root);
    if (cfg.k >= static_cast<int>(samples.size())) {
      throw mpa::pipeline::ConfigError("k must be smaller than the dataset");
    }
    mpa::select::EmbeddingSet embeddings;
    if (cfg.embedding_backend == "toy") {
      for (const auto& s : samples) {
        embeddings.items.push_back(mpa::embed::embed_toy(
            mpa::core::load_image(s.image_path, cfg.target_size), s.id));
      }
    } else {
      mpa::embed::ExternalEmbedder embedder(cfg.embedding_backend,
                                            cfg.backend_timeout_ms);
      std::vector<std::pair<std::string, std::string>> id_paths;
      for (const auto& s : samples) id_paths.emplace_back(s.id, s.image_path);
      embeddings.items = embedder.embed_paths(id_paths);
    }
    const auto selection =
        cfg.toggles.es ? mpa::select::select_support(embeddings, cfg.k)
                       : mpa::select::select_first_k(embeddings, cfg.k);
    const std::string path =
        (fs::path(cfg.output_dir) / "selection.json").string();
    mpa::select::save_selection(selection, embeddings, path);
    for (const auto& id : selection.support_ids) std::printf("%s\n", id.c_str());
    note("wrote " + path);
    return 0;
  }

  if (register_cmd->parsed()) {
    auto cfg = effective_config(config_path, "", -1);
    const auto moving = mpa::core::to_grayscale(
        mpa::core::load_image(moving_path, reg_size));
    const auto fixed =
        mpa::core::to_grayscale(mpa::core::load_image(fixed_path, reg_size));
    const auto field =
        mpa::registration::register_pair(moving, fixed, cfg.registration);
    mpa::registration::save_field(field, field_out);
    note("wrote " + field_out);
    return 0;
  }

  if (propagate_cmd->parsed()) {
    const auto field = mpa::registration::load_field(prop_field);
    const auto mask = mpa::core::load_mask(prop_mask, field.height);
    const auto soft = mpa::registration::propagate_mask(mask, field);
    mpa::core::save_mask(mpa::core::threshold(soft, 0.5f), prop_out);
    if (!prop_soft_out.empty()) {
      mpa::core::ScalarField grid(soft.height, soft.width);
      grid.data = soft.data;
      mpa::registration::save_scalar_grid(grid, prop_soft_out);
    }
    note("wrote " + prop_out);
    return 0;
  }

  if (prompt_cmd->parsed()) {
    const auto grid = mpa::registration::load_scalar_grid(prompt_coarse);
    mpa::core::SoftMask coarse(grid.height, grid.width);
    coarse.data = grid.data;
    for (float& v : coarse.data) v = std::clamp(v, 0.0f, 1.0f);
    const auto prompts =
        mpa::prompt::generate_prompts(coarse, prompt_margin, prompt_scale);
    const std::string sidecar =
        fs::path(prompt_json).stem().string() + ".mpal";
    mpa::prompt::save_prompts(prompts, prompt_json, sidecar);
    note("wrote " + prompt_json);
    return 0;
  }

  if (segment_cmd->parsed()) {
    const auto file = mpa::prompt::load_prompts(seg_prompts);
    mpa::segment::SegmentationRequest request;
    request.sample_id = fs::path(seg_image).stem().string();
    request.image = mpa::core::to_grayscale(
        mpa::core::load_image(seg_image, seg_size));
    request.image_path = seg_image;
    request.prompts = file.prompts;
    std::shared_ptr<mpa::segment::SegmenterBackend> backend;
    if (seg_backend == "mock") {
      backend = std::make_shared<mpa::segment::MockSegmenter>(seg_tol);
    } else {
      backend = std::make_shared<mpa::segment::ExternalSegmenter>(seg_backend);
      fs::path sidecar(file.logits_ref);
      if (sidecar.is_relative()) {
        sidecar = fs::path(seg_prompts).parent_path() / sidecar;
      }
      request.logits_path = sidecar.string();
    }
    mpa::segment::SegmenterClient client(backend);
    const auto result = client.segment(request);
    mpa::core::save_mask(result.mask, seg_out);
    std::printf("confidence: %.4f\n", result.confidence);
    return 0;
  }

  if (evaluate_cmd->parsed()) {
    const auto result = mpa::pipeline::evaluate(eval_pred, eval_truth);
    for (const auto& rec : result.records) {
      std::printf("%-16s %.4f%s%s\n", rec.id.c_str(), rec.dice,
                  rec.note.empty() ? "" : "  ", rec.note.c_str());
    }
    std::printf("mean: %.4f  std: %.4f  (n=%zu)\n", result.mean, result.stddev,
                result.records.size());
    if (!eval_json.empty()) {
      nlohmann::ordered_json doc;
      auto& records = doc["records"] = nlohmann::ordered_json::array();
      for (const auto& rec : result.records) {
        records.push_back(
            {{"id", rec.id}, {"dice", rec.dice}, {"note", rec.note}});
      }
      doc["mean"] = result.mean;
      doc["std"] = result.stddev;
      std::ofstream out(eval_json, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + eval_json);
      out << doc.dump(2) << "\n";
    }
    return 0;
  }

  if (synth_cmd->parsed()) {
    if (output.empty()) {
      throw mpa::pipeline::ConfigError("synth needs --output");
    }
    mpa::pipeline::make_synthetic_dataset(synth_n, synth_seed, output);
    note("wrote " + std::to_string(synth_n) + " samples to " + output);
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot medical segmentation pipeline"};
  try {
    return dispatch(app, argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const mpa::pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
