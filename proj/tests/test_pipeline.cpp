#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nbr/cli.hpp"
#include "nbr/detail/io_util.hpp"
#include "nbr/errors.hpp"
#include "test_support.hpp"

using namespace nbr;
using nbr::testsupport::temp_dir;
namespace fs = std::filesystem;

namespace {

RunConfig synth_config(const fs::path& out, std::uint64_t seed = 9, int workers = 1) {
  RunConfig cfg;
  cfg.subcommand = "synth";
  cfg.out_dir = out.string();
  cfg.synth.n_users = 120;
  cfg.synth.n_items = 80;
  cfg.synth.repeat_prob = 0.5;
  cfg.synth.seed = seed;
  cfg.workers = workers;
  return cfg;
}

std::string slurp(const fs::path& path) { return ioutil::read_text_file(path.string()); }

}  // namespace

TEST_CASE("synth -> run -> eval -> analyze round trip") {
  const fs::path root = temp_dir("pipeline");
  const fs::path data = root / "data";
  const fs::path preds = root / "preds";
  const fs::path evals = root / "eval";
  const fs::path analysis = root / "analysis";

  cmd_synth(synth_config(data));
  CHECK(fs::exists(data / "baskets.jsonl"));
  CHECK(fs::exists(data / "vocabulary.jsonl"));
  CHECK(fs::exists(data / "splits.jsonl"));
  CHECK(fs::exists(data / "resolved_config.json"));

  RunConfig run;
  run.subcommand = "run";
  run.data_dir = data.string();
  run.out_dir = preds.string();
  run.methods = {"all-frequency", "tifuknn"};
  run.k_list = {5, 10};
  run.tifuknn.k_neighbors = 20;
  cmd_run(run);
  for (const char* name : {"predictions_g-topfreq.jsonl", "predictions_p-topfreq.jsonl",
                           "predictions_gp-topfreq.jsonl", "predictions_tifuknn.jsonl"}) {
    CHECK(fs::exists(preds / name));
  }

  RunConfig eval;
  eval.subcommand = "eval";
  eval.data_dir = data.string();
  eval.out_dir = evals.string();
  eval.k_list = {5, 10};
  eval.pred_files = {(preds / "predictions_gp-topfreq.jsonl").string(),
                     (preds / "predictions_p-topfreq.jsonl").string(),
                     (preds / "predictions_g-topfreq.jsonl").string()};
  cmd_eval(eval);
  CHECK(fs::exists(evals / "metrics_gp-topfreq_k5.json"));
  CHECK(fs::exists(evals / "metrics_gp-topfreq_k10.json"));
  CHECK(fs::exists(evals / "metrics.csv"));

  const auto gp = nlohmann::json::parse(slurp(evals / "metrics_gp-topfreq_k10.json"));
  const auto p = nlohmann::json::parse(slurp(evals / "metrics_p-topfreq_k10.json"));
  CHECK(gp.at("recall").get<double>() >= p.at("recall").get<double>());
  CHECK(p.at("recall_expl").get<double>() == 0.0);

  RunConfig analyze;
  analyze.subcommand = "analyze";
  analyze.data_dir = data.string();
  analyze.out_dir = analysis.string();
  analyze.k_list = {10};
  analyze.report_files = {(evals / "metrics_gp-topfreq_k10.json").string(),
                          (evals / "metrics_p-topfreq_k10.json").string()};
  analyze.pred_files = eval.pred_files;
  cmd_analyze(analyze);
  CHECK(fs::exists(analysis / "comparison.csv"));
  CHECK(fs::exists(analysis / "comparison.txt"));
  CHECK(fs::exists(analysis / "comparison_plot.json"));
  CHECK(fs::exists(analysis / "component_profile_k10.csv"));
  CHECK(fs::exists(analysis / "component_plot_k10.json"));
  CHECK(fs::exists(analysis / "contribution_k10.csv"));

  const auto plot = nlohmann::json::parse(slurp(analysis / "component_plot_k10.json"));
  CHECK(plot.at("series").size() == 3);
  CHECK(plot.at("baseline_lines").contains("upper_bound_repr"));

  // Subcommands are re-runnable over existing output directories.
  const std::string before = slurp(evals / "metrics.csv");
  cmd_eval(eval);
  CHECK(slurp(evals / "metrics.csv") == before);
}

TEST_CASE("identical seeds with different worker counts give byte-identical outputs") {
  const fs::path root = temp_dir("pipeline_workers");
  const fs::path data1 = root / "d1";
  const fs::path data2 = root / "d2";
  cmd_synth(synth_config(data1, 77, 1));
  cmd_synth(synth_config(data2, 77, 4));
  for (const char* name : {"baskets.jsonl", "vocabulary.jsonl", "splits.jsonl",
                           "stats.json"}) {
    CHECK(slurp(data1 / name) == slurp(data2 / name));
  }

  auto run_with = [&](const fs::path& data, const fs::path& out, int workers) {
    RunConfig run;
    run.subcommand = "run";
    run.data_dir = data.string();
    run.out_dir = out.string();
    run.methods = {"gp-topfreq", "upcf"};
    run.k_list = {10};
    run.workers = workers;
    cmd_run(run);
    RunConfig eval;
    eval.subcommand = "eval";
    eval.data_dir = data.string();
    eval.out_dir = (out / "eval").string();
    eval.k_list = {10};
    eval.workers = workers;
    eval.pred_files = {(out / "predictions_gp-topfreq.jsonl").string(),
                       (out / "predictions_upcf.jsonl").string()};
    cmd_eval(eval);
  };
  run_with(data1, root / "o1", 1);
  run_with(data2, root / "o2", 4);
  for (const char* name :
       {"predictions_gp-topfreq.jsonl", "predictions_upcf.jsonl",
        "eval/metrics_gp-topfreq_k10.json", "eval/metrics_upcf_k10.json",
        "eval/metrics.csv"}) {
    CHECK(slurp(root / "o1" / name) == slurp(root / "o2" / name));
  }
}

TEST_CASE("grid search writes per-point files and a selection manifest") {
  const fs::path root = temp_dir("pipeline_grid");
  const fs::path data = root / "data";
  cmd_synth(synth_config(data));

  RunConfig run;
  run.subcommand = "run";
  run.data_dir = data.string();
  run.out_dir = (root / "grid").string();
  run.methods = {"upcf"};
  run.k_list = {5};
  run.grid = "small";
  cmd_run(run);

  const auto manifest =
      nlohmann::json::parse(slurp(root / "grid" / "grid_upcf.json"));
  REQUIRE(manifest.at("points").size() == 6);
  for (const auto& point : manifest.at("points")) {
    CHECK(fs::exists(root / "grid" / point.at("file").get<std::string>()));
  }
  const auto& selected = manifest.at("selected");
  double best = -1;
  for (const auto& point : manifest.at("points")) {
    best = std::max(best, point.at("val_recall").get<double>());
  }
  CHECK(selected.at("val_recall").get<double>() == best);
  CHECK(fs::exists(root / "grid" / "predictions_upcf.jsonl"));
  // The canonical file equals the selected grid point's file.
  const std::string chosen =
      manifest.at("points")[selected.at("index").get<std::size_t>()]
          .at("file")
          .get<std::string>();
  CHECK(slurp(root / "grid" / "predictions_upcf.jsonl") ==
        slurp(root / "grid" / chosen));
}

TEST_CASE("config file values sit under explicit flags") {
  RunConfig cfg;
  cfg.apply_json(nlohmann::json{{"k", {3, 7}},
                                {"coverage", 0.9},
                                {"tifuknn", {{"k_neighbors", 42}}},
                                {"target", "first-test-basket"}});
  CHECK(cfg.k_list == std::vector<int>{3, 7});
  CHECK(cfg.preprocess.interaction_coverage == 0.9);
  CHECK(cfg.tifuknn.k_neighbors == 42);
  CHECK(cfg.cohort_options().target == TargetMode::first_test_basket);
  // Unknown target mode surfaces as a config error.
  cfg.target_mode = "latest";
  CHECK_THROWS_AS(cfg.cohort_options(), ConfigError);
}

TEST_CASE("subcommand errors carry the right exception types") {
  RunConfig cfg;
  cfg.subcommand = "run";
  cfg.out_dir = temp_dir("pipeline_err").string();
  cfg.methods = {"gp-topfreq"};
  CHECK_THROWS_AS(run_command(cfg), ConfigError);  // no --data

  cfg.data_dir = "/nonexistent/bundle";
  CHECK_THROWS_AS(run_command(cfg), IoError);

  cfg.subcommand = "nonsense";
  CHECK_THROWS_AS(run_command(cfg), ConfigError);
}

TEST_CASE("binary exit codes distinguish config, data, and i/o failures") {
  const char* cli = std::getenv("NBR_CLI");
  if (cli == nullptr || *cli == '\0') {
    return;  // only meaningful under ctest, which points at the built binary
  }
  const fs::path root = temp_dir("pipeline_exit");
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("ingest --schema bogus --in x.csv --out " + (root / "o").string()) == 2);
  CHECK(run("ingest --schema tafeng --in /nonexistent.csv --out " +
            (root / "o").string()) == 4);
  CHECK(run("synth --users 50 --items 30 --out " + (root / "data").string()) == 0);
  // Prediction file built against a different vocabulary: data error.
  CHECK(run("synth --users 50 --items 31 --seed 9 --out " + (root / "other").string()) ==
        0);
  CHECK(run("run --data " + (root / "data").string() + " --method g-topfreq --k 5 --out " +
            (root / "preds").string()) == 0);
  CHECK(run("eval --data " + (root / "other").string() + " --pred " +
            (root / "preds" / "predictions_g-topfreq.jsonl").string() + " --k 5 --out " +
            (root / "eval").string()) == 3);

  // Config file sets the user count; an explicit flag overrides it.
  const fs::path config = root / "synth.json";
  ioutil::write_text_file_atomic(config.string(),
                                 R"({"synth": {"n_users": 40, "n_items": 25}})");
  CHECK(run("synth --config " + config.string() + " --out " +
            (root / "from_config").string()) == 0);
  auto stats = nlohmann::json::parse(slurp(root / "from_config" / "stats.json"));
  CHECK(stats.at("n_users") == 40);
  CHECK(run("synth --config " + config.string() + " --users 33 --out " +
            (root / "overridden").string()) == 0);
  stats = nlohmann::json::parse(slurp(root / "overridden" / "stats.json"));
  CHECK(stats.at("n_users") == 33);
}

TEST_CASE("eval rejects k above the prediction file capacity") {
  const fs::path root = temp_dir("pipeline_k");
  const fs::path data = root / "data";
  cmd_synth(synth_config(data));
  RunConfig run;
  run.subcommand = "run";
  run.data_dir = data.string();
  run.out_dir = (root / "p").string();
  run.methods = {"g-topfreq"};
  run.k_list = {5};
  cmd_run(run);

  RunConfig eval;
  eval.subcommand = "eval";
  eval.data_dir = data.string();
  eval.out_dir = (root / "e").string();
  eval.k_list = {10};
  eval.pred_files = {(root / "p" / "predictions_g-topfreq.jsonl").string()};
  CHECK_THROWS_AS(cmd_eval(eval), ConfigError);
}
