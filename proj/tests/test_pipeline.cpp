#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "mpa/core/dataset.hpp"
#include "mpa/core/image_io.hpp"
#include "mpa/core/mask_ops.hpp"
#include "mpa/embed/embedding.hpp"
#include "mpa/pipeline/config.hpp"
#include "mpa/pipeline/pipeline.hpp"
#include "mpa/pipeline/report.hpp"
#include "mpa/pipeline/synth.hpp"
#include "mpa/prompt/prompt.hpp"
#include "mpa/registration/field.hpp"
#include "mpa/select/selection.hpp"

using namespace mpa;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

pipeline::PipelineConfig base_config(const fs::path& data, const fs::path& out) {
  pipeline::PipelineConfig cfg;
  cfg.dataset_root = data.string();
  cfg.output_dir = out.string();
  cfg.k = 2;
  cfg.workers = 1;
  cfg.prompt.expand_margin = 4;
  return cfg;
}

pipeline::RunReport run_fresh(pipeline::PipelineConfig cfg) {
  fs::remove_all(cfg.output_dir);
  return pipeline::run(cfg);
}

}  // namespace

TEST_CASE("config defaults parse from a minimal document") {
  nlohmann::json doc = {{"dataset_root", "/data"}, {"output_dir", "/out"}};
  pipeline::PipelineConfig cfg = pipeline::parse_config(doc);
  CHECK(cfg.k == 5);
  CHECK(cfg.toggles.es);
  CHECK(cfg.toggles.mp);
  CHECK(cfg.toggles.pa);
  CHECK(cfg.toggles.pr);
  CHECK(cfg.embedding_backend == "toy");
  CHECK(cfg.segmentation_backend == "mock");
  CHECK(cfg.registration.levels == 3);
  CHECK(cfg.registration.grid_spacing_finest == 32.0);
  CHECK(cfg.registration.lambda_bend == 0.1);
  CHECK(cfg.refinement_rounds == 1);
  CHECK(cfg.target_size == 256);
}

TEST_CASE("config round-trips through its json echo") {
  nlohmann::json doc = {{"dataset_root", "/data"},
                        {"output_dir", "/out"},
                        {"k", 3},
                        {"toggles", {{"es", false}, {"pr", false}}},
                        {"registration", {{"levels", 2}, {"lambda_bend", 0.5}}},
                        {"prompt", {{"expand_margin", 7}}},
                        {"mock_tol", 0.25},
                        {"workers", 2}};
  pipeline::PipelineConfig cfg = pipeline::parse_config(doc);
  pipeline::PipelineConfig back =
      pipeline::parse_config(pipeline::config_to_json(cfg));
  CHECK(back.k == 3);
  CHECK(!back.toggles.es);
  CHECK(!back.toggles.pr);
  CHECK(back.registration.levels == 2);
  CHECK(back.registration.lambda_bend == 0.5);
  CHECK(back.prompt.expand_margin == 7);
  CHECK(back.mock_tol == 0.25f);
  CHECK(back.workers == 2);
  CHECK(pipeline::config_to_json(back) == pipeline::config_to_json(cfg));
}

TEST_CASE("config rejects unknown keys and invalid toggles") {
  nlohmann::json doc = {{"dataset_root", "/d"},
                        {"output_dir", "/o"},
                        {"quantum", true}};
  CHECK_THROWS_AS(pipeline::parse_config(doc), pipeline::ConfigError);

  nlohmann::json mp_off = {{"dataset_root", "/d"},
                           {"output_dir", "/o"},
                           {"toggles", {{"mp", false}}}};
  CHECK_THROWS_WITH_AS(pipeline::parse_config(mp_off),
                       doctest::Contains("mask propagation"),
                       pipeline::ConfigError);

  nlohmann::json pr_only = {{"dataset_root", "/d"},
                            {"output_dir", "/o"},
                            {"toggles", {{"pa", false}, {"pr", true}}}};
  CHECK_THROWS_AS(pipeline::parse_config(pr_only), pipeline::ConfigError);

  nlohmann::json bad_k = {{"dataset_root", "/d"}, {"output_dir", "/o"},
                          {"k", 0}};
  CHECK_THROWS_AS(pipeline::parse_config(bad_k), pipeline::ConfigError);

  nlohmann::json bad_backend = {{"dataset_root", "/d"},
                                {"output_dir", "/o"},
                                {"segmentation_backend", "ouija"}};
  CHECK_THROWS_AS(pipeline::parse_config(bad_backend), pipeline::ConfigError);
}

TEST_CASE("report files round-trip byte-identically") {
  pipeline::RunReport rep;
  rep.config = nlohmann::ordered_json{{"k", 2}};
  rep.dataset_root = "/data";
  rep.sample_count = 3;
  rep.dataset_hash = "abc123";
  rep.support_ids = {"s0"};
  pipeline::QueryRecord q1;
  q1.query_id = "q1";
  q1.support_id = "s0";
  q1.coarse_dice = 0.5;
  q1.final_dice = 0.75;
  q1.rounds = 1;
  q1.register_ms = 12.5;
  q1.segment_ms = 3.25;
  q1.total_ms = 16.0;
  pipeline::QueryRecord q2;
  q2.query_id = "q2";
  q2.support_id = "s0";
  q2.error = "backend declines";
  rep.records = {q1, q2};
  rep.selection_ms = 4.0;
  rep.total_ms = 30.0;

  fs::path dir = scratch_dir("mpa_report_rt");
  const std::string p1 = (dir / "r1.json").string();
  const std::string p2 = (dir / "r2.json").string();
  pipeline::save_report(rep, p1);
  pipeline::RunReport back = pipeline::load_report(p1);
  pipeline::save_report(back, p2);
  CHECK(slurp(p1) == slurp(p2));

  pipeline::Aggregates agg = pipeline::aggregate(back.records);
  CHECK(agg.queries == 2);
  CHECK(agg.failures == 1);
  CHECK(*agg.mean_coarse_dice == doctest::Approx(0.5));
  CHECK(*agg.mean_final_dice == doctest::Approx(0.75));
  CHECK(*agg.std_final_dice == doctest::Approx(0.0));
  fs::remove_all(dir);
}

TEST_CASE("strip_timings removes every timing block and nothing else") {
  pipeline::RunReport rep;
  rep.config = nlohmann::ordered_json{{"k", 1}};
  pipeline::QueryRecord q;
  q.query_id = "q";
  q.support_id = "s";
  q.total_ms = 9.0;
  rep.records = {q};
  nlohmann::ordered_json doc = pipeline::report_to_json(rep);
  REQUIRE(doc.contains("timings"));
  REQUIRE(doc["records"][0].contains("timings"));
  pipeline::strip_timings(doc);
  CHECK(!doc.contains("timings"));
  CHECK(!doc["records"][0].contains("timings"));
  CHECK(doc["records"][0].contains("query_id"));
  CHECK(doc.contains("aggregates"));
}

TEST_CASE("csv export matches the golden layout") {
  pipeline::RunReport rep;
  pipeline::QueryRecord q1;
  q1.query_id = "q1";
  q1.support_id = "s1";
  q1.coarse_dice = 0.5;
  q1.final_dice = 0.75;
  q1.rounds = 1;
  pipeline::QueryRecord q2;
  q2.query_id = "q2";
  q2.support_id = "s1";
  q2.error = "boom, with a comma";
  rep.records = {q1, q2};
  fs::path dir = scratch_dir("mpa_csv");
  const std::string path = (dir / "r.csv").string();
  pipeline::save_report_csv(rep, path);
  CHECK(slurp(path) ==
        "query_id,support_id,coarse_dice,final_dice,fallback,rounds,warning,"
        "error\n"
        "q1,s1,0.500000,0.750000,0,1,0,\n"
        "q2,s1,,,0,0,0,\"boom, with a comma\"\n");
  fs::remove_all(dir);
}

TEST_CASE("synthetic dataset is reproducible and well-formed") {
  fs::path d1 = scratch_dir("mpa_synth_a");
  fs::path d2 = scratch_dir("mpa_synth_b");
  pipeline::make_synthetic_dataset(8, 7, d1.string());
  pipeline::make_synthetic_dataset(8, 7, d2.string());
  int seen = 0;
  for (const auto& entry : fs::recursive_directory_iterator(d1)) {
    if (!entry.is_regular_file()) continue;
    ++seen;
    fs::path rel = fs::relative(entry.path(), d1);
    CHECK(slurp(entry.path().string()) == slurp((d2 / rel).string()));
  }
  CHECK(seen == 16);

  std::vector<pipeline::SynthSample> samples =
      pipeline::make_synthetic_samples(8, 7);
  for (const auto& s : samples) {
    CHECK(s.image.height == 256);
    CHECK(s.image.width == 256);
    REQUIRE(s.mask.area() > 0);
    core::BBox b = core::bounding_box(s.mask);
    // blob center stays in the middle half of the frame
    const double cx = 0.5 * (b.x_min + b.x_max);
    const double cy = 0.5 * (b.y_min + b.y_max);
    CHECK(cx >= 64.0);
    CHECK(cx <= 192.0);
    CHECK(cy >= 64.0);
    CHECK(cy <= 192.0);
    // radius bounds from the spec sheet: 20..60 px
    CHECK(b.box_width() >= 40);
    CHECK(b.box_width() <= 120);
  }
  CHECK_THROWS(pipeline::make_synthetic_samples(1, 7));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("dataset listing pairs masks by stem and sorts by id") {
  fs::path dir = scratch_dir("mpa_ds");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  core::ImageTensor img(8, 8, 1);
  core::save_image(img, (dir / "images" / "b.png").string());
  core::save_image(img, (dir / "images" / "a.png").string());
  core::BinaryMask m(8, 8, 1);
  core::save_mask(m, (dir / "masks" / "b.png").string());
  std::vector<core::SampleRecord> ds = core::list_dataset(dir.string());
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].id == "a");
  CHECK(!ds[0].mask_path);
  CHECK(ds[1].id == "b");
  CHECK(ds[1].mask_path);
  fs::remove_all(dir);
  CHECK_THROWS(core::list_dataset(dir.string()));
}

TEST_CASE("evaluate scores matches, misses, and size mismatches") {
  fs::path dir = scratch_dir("mpa_eval");
  fs::create_directories(dir / "truth");
  fs::create_directories(dir / "pred");
  core::BinaryMask t(8, 8, 0);
  for (int x = 0; x < 4; ++x) t.at(4, x) = 1;
  core::save_mask(t, (dir / "truth" / "a.png").string());
  core::save_mask(t, (dir / "truth" / "b.png").string());
  core::save_mask(t, (dir / "truth" / "c.png").string());
  core::BinaryMask p(8, 8, 0);
  p.at(4, 0) = p.at(4, 1) = 1;  // half of the truth row
  core::save_mask(p, (dir / "pred" / "a.png").string());
  core::save_mask(t, (dir / "pred" / "b.png").string());
  // c.png missing
  pipeline::EvalResult res = pipeline::evaluate((dir / "pred").string(),
                                                (dir / "truth").string());
  REQUIRE(res.records.size() == 3);
  CHECK(res.records[0].id == "a");
  CHECK(res.records[0].dice == doctest::Approx(2.0 * 2 / (2 + 4)));
  CHECK(res.records[1].dice == doctest::Approx(1.0));
  CHECK(res.records[2].note == "missing");
  CHECK(res.records[2].dice == doctest::Approx(0.0));
  CHECK(res.mean ==
        doctest::Approx((2.0 / 3.0 + 1.0 + 0.0) / 3.0).epsilon(1e-9));

  fs::remove_all(dir / "pred");
  fs::create_directories(dir / "pred");
  CHECK_THROWS(pipeline::evaluate((dir / "pred").string(),
                                  (dir / "truth").string()));
  fs::remove_all(dir);
}

TEST_CASE("pipeline produces re-readable artifacts for every query") {
  fs::path data = scratch_dir("mpa_pipe_data");
  pipeline::make_synthetic_dataset(6, 11, data.string());
  fs::path out = fs::temp_directory_path() / "mpa_pipe_out";
  pipeline::PipelineConfig cfg = base_config(data, out);
  pipeline::RunReport rep = run_fresh(cfg);

  REQUIRE(rep.records.size() == 4);
  CHECK(std::is_sorted(rep.records.begin(), rep.records.end(),
                       [](const auto& a, const auto& b) {
                         return a.query_id < b.query_id;
                       }));
  embed::EmbeddingCache cache =
      embed::cache_read((out / "embeddings.mpae").string());
  CHECK(cache.entries.size() == 6);
  select::SelectionResult sel =
      select::load_selection((out / "selection.json").string());
  CHECK(sel.support_ids.size() == 2);
  CHECK(sel.support_ids == rep.support_ids);

  for (const pipeline::QueryRecord& r : rep.records) {
    CHECK(r.error.empty());
    REQUIRE(r.coarse_dice.has_value());
    REQUIRE(r.final_dice.has_value());
    const std::string id = r.query_id;
    registration::DeformationField f =
        registration::load_field((out / "fields" / (id + ".mpad")).string());
    CHECK(f.height == 256);
    core::ScalarField coarse = registration::load_scalar_grid(
        (out / "coarse" / (id + ".mpal")).string());
    CHECK(coarse.height == 256);
    prompt::PromptFile pf =
        prompt::load_prompts((out / "prompts" / (id + ".json")).string());
    CHECK(pf.prompts.points.size() == 5);
    core::BinaryMask pred =
        core::load_mask((out / "predictions" / (id + ".png")).string());
    CHECK(pred.height == 256);
    CHECK(r.rounds == 1);
  }

  pipeline::RunReport loaded =
      pipeline::load_report((out / "report.json").string());
  pipeline::Aggregates agg = pipeline::aggregate(loaded.records);
  CHECK(agg.queries == 4);
  CHECK(agg.failures == 0);
  CHECK(slurp((out / "report.csv").string()).substr(0, 8) == "query_id");
  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("two identical runs agree up to timings") {
  fs::path data = scratch_dir("mpa_det_data");
  pipeline::make_synthetic_dataset(5, 13, data.string());
  fs::path out1 = fs::temp_directory_path() / "mpa_det_out1";
  fs::path out2 = fs::temp_directory_path() / "mpa_det_out2";
  pipeline::PipelineConfig cfg1 = base_config(data, out1);
  pipeline::PipelineConfig cfg2 = base_config(data, out2);
  pipeline::RunReport r1 = run_fresh(cfg1);
  pipeline::RunReport r2 = run_fresh(cfg2);
  nlohmann::ordered_json j1 = pipeline::report_to_json(r1);
  nlohmann::ordered_json j2 = pipeline::report_to_json(r2);
  pipeline::strip_timings(j1);
  pipeline::strip_timings(j2);
  j1["config"].erase("output_dir");
  j2["config"].erase("output_dir");
  CHECK(j1 == j2);
  fs::remove_all(data);
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("k bounds are enforced against the dataset size") {
  fs::path data = scratch_dir("mpa_kbound");
  pipeline::make_synthetic_dataset(3, 5, data.string());
  fs::path out = fs::temp_directory_path() / "mpa_kbound_out";
  pipeline::PipelineConfig cfg = base_config(data, out);
  cfg.k = 3;
  fs::remove_all(out);
  CHECK_THROWS_AS(pipeline::run(cfg), pipeline::ConfigError);
  cfg.k = 2;  // K = N-1 leaves exactly one query
  pipeline::RunReport rep = run_fresh(cfg);
  CHECK(rep.records.size() == 1);
  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("external embedder integrates into a full run") {
  fs::path data = scratch_dir("mpa_ext_data");
  pipeline::make_synthetic_dataset(4, 17, data.string());
  fs::path out = fs::temp_directory_path() / "mpa_ext_out";
  pipeline::PipelineConfig cfg = base_config(data, out);
  cfg.embedding_backend =
      "exec:python3 " + std::string(MPA_STUBS_DIR) + "/stub_embedder.py";
  pipeline::RunReport rep = run_fresh(cfg);
  CHECK(rep.records.size() == 2);
  embed::EmbeddingCache cache =
      embed::cache_read((out / "embeddings.mpae").string());
  CHECK(cache.backend_tag != "toy");
  CHECK(cache.dimension == 4);
  for (const pipeline::QueryRecord& r : rep.records) CHECK(r.error.empty());
  fs::remove_all(data);
  fs::remove_all(out);
}
