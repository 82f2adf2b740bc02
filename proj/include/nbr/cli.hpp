#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbr/baselines.hpp"
#include "nbr/dataset.hpp"
#include "nbr/synthgen.hpp"

namespace nbr {

// Resolved configuration for one subcommand invocation. Precedence is
// CLI flags > --config file > defaults; the final state is echoed into the
// output directory as resolved_config.json.
struct RunConfig {
  std::string subcommand;

  std::string input_path;         // ingest --in
  std::string schema = "tafeng";  // ingest --schema (plus "synthetic")
  std::string data_dir;           // run/eval/analyze --data: canonical dataset dir
  std::string out_dir;
  std::string dataset_name;  // optional name override for ingest/synth

  std::vector<std::string> methods;       // run --method
  std::vector<std::string> pred_files;    // eval/analyze --pred
  std::vector<std::string> report_files;  // analyze --report

  std::vector<int> k_list{10, 20};
  PreprocessConfig preprocess;
  std::optional<std::int64_t> max_days;
  SynthConfig synth;
  TifuknnParams tifuknn;
  UpcfParams upcf;
  std::string grid = "none";  // none | small
  std::string target_mode = "rolling";  // rolling | first-test-basket
  bool include_validation_history = true;
  std::uint64_t seed = 42;
  int workers = 1;

  void apply_json(const nlohmann::json& j);  // config-file layer
  nlohmann::json to_json() const;
  CohortOptions cohort_options() const;
};

// Paths are resolved against $NBR_DATA_ROOT when it is set and the path is
// relative; otherwise returned unchanged.
std::string resolve_data_path(const std::string& path);

void cmd_ingest(const RunConfig& cfg);
void cmd_synth(const RunConfig& cfg);
void cmd_run(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_analyze(const RunConfig& cfg);

// Dispatches on cfg.subcommand; exceptions propagate to the caller.
void run_command(const RunConfig& cfg);

}  // namespace nbr
