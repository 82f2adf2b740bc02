#include <cstring>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbr/cli.hpp"
#include "nbr/detail/io_util.hpp"
#include "nbr/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitIo = 4;

// The --config file forms the middle precedence layer, so it has to be
// applied to the defaults before CLI11 binds the explicit flags over it.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc - 1; ++i) {
    if (std::strcmp(argv[i], "--config") == 0) return argv[i + 1];
    if (std::strncmp(argv[i], "--config=", 9) == 0) return argv[i] + 9;
  }
  if (argc >= 2 && std::strncmp(argv[argc - 1], "--config=", 9) == 0) {
    return argv[argc - 1] + 9;
  }
  return {};
}

void add_common_options(CLI::App* cmd, nbr::RunConfig& cfg) {
  cmd->add_option("--config", "JSON config file (flags override its values)")
      ->type_name("FILE");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--seed", cfg.seed, "PRNG seed");
  cmd->add_option("--workers", cfg.workers, "worker threads for per-user stages");
  cmd->add_option("--k", cfg.k_list, "basket sizes to evaluate (e.g. --k 10 20)")
      ->delimiter(',');
}

void add_cohort_options(CLI::App* cmd, nbr::RunConfig& cfg) {
  cmd->add_option("--target", cfg.target_mode,
                  "evaluation targets: rolling (every test basket) or first-test-basket");
  cmd->add_flag("!--no-val-history", cfg.include_validation_history,
                "exclude validation baskets from the history/repeat set");
}

}  // namespace

int main(int argc, char** argv) {
  nbr::RunConfig cfg;

  const std::string config_path = find_config_arg(argc, argv);
  if (!config_path.empty()) {
    try {
      cfg.apply_json(nbr::ioutil::parse_json_line(
          nbr::ioutil::read_text_file(nbr::resolve_data_path(config_path)),
          "config file"));
    } catch (const nbr::IoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitIo;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }

  CLI::App app{"next-basket recommendation harness: preprocess transaction logs, run "
               "frequency/neighbor baselines, and score ranked predictions"};
  app.require_subcommand(1);

  CLI::App* ingest = app.add_subcommand(
      "ingest", "parse a transaction log into the canonical dataset format");
  ingest->add_option("--schema", cfg.schema,
                     "tafeng | dunnhumby | instacart | canonical | synthetic");
  ingest->add_option("--in", cfg.input_path, "source file or directory");
  ingest->add_option("--name", cfg.dataset_name, "dataset name override");
  ingest->add_option("--min-baskets", cfg.preprocess.min_baskets_per_user,
                     "lower bound of the per-user sampling rule");
  ingest->add_option("--max-baskets", cfg.preprocess.max_baskets_per_user,
                     "upper bound of the per-user sampling rule");
  ingest->add_option("--coverage", cfg.preprocess.interaction_coverage,
                     "interaction share kept when removing rare items");
  ingest->add_flag("--filter-by-basket-size", cfg.preprocess.filter_by_basket_size,
                   "bound users by average basket size instead of basket count");
  std::vector<double> split_fractions;
  ingest->add_option("--split", split_fractions, "train,val,test fractions")
      ->delimiter(',')
      ->expected(3);
  ingest->add_option("--max-days", "keep only the first N days of the log")
      ->type_name("INT")
      ->each([&cfg](const std::string& v) { cfg.max_days = std::stoll(v); });
  add_common_options(ingest, cfg);

  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic basket dataset in canonical format");
  synth->add_option("--users", cfg.synth.n_users, "number of users");
  synth->add_option("--items", cfg.synth.n_items, "vocabulary size");
  synth->add_option("--min-baskets", cfg.synth.min_baskets, "min baskets per user");
  synth->add_option("--max-baskets", cfg.synth.max_baskets, "max baskets per user");
  synth->add_option("--min-size", cfg.synth.min_basket_size, "min items per basket");
  synth->add_option("--max-size", cfg.synth.max_basket_size, "max items per basket");
  synth->add_option("--rho", cfg.synth.repeat_prob,
                    "per-slot probability of drawing a repeat item");
  synth->add_option("--pop-exponent", cfg.synth.popularity_exponent,
                    "power-law exponent of item popularity");
  synth->add_option("--name", cfg.dataset_name, "dataset name");
  add_common_options(synth, cfg);

  CLI::App* run = app.add_subcommand(
      "run", "fit baselines and write ranked-prediction interchange files");
  run->add_option("--data", cfg.data_dir, "canonical dataset directory");
  run->add_option("--method", cfg.methods,
                  "g-topfreq | p-topfreq | gp-topfreq | tifuknn | upcf | all-frequency | all")
      ->delimiter(',');
  run->add_option("--grid", cfg.grid, "hyperparameter grid: none | small");
  run->add_option("--tifuknn-k", cfg.tifuknn.k_neighbors, "tifuknn neighbor count");
  run->add_option("--tifuknn-m", cfg.tifuknn.group_size, "tifuknn group size");
  run->add_option("--tifuknn-rb", cfg.tifuknn.within_decay, "tifuknn within-group decay");
  run->add_option("--tifuknn-rg", cfg.tifuknn.group_decay, "tifuknn group decay");
  run->add_option("--tifuknn-alpha", cfg.tifuknn.fusion_alpha, "tifuknn fusion weight");
  run->add_option("--upcf-r", cfg.upcf.recency_window, "upcf recency window");
  run->add_option("--upcf-q", cfg.upcf.locality, "upcf locality exponent");
  run->add_option("--upcf-alpha", cfg.upcf.asymmetry, "upcf asymmetric-cosine weight");
  add_cohort_options(run, cfg);
  add_common_options(run, cfg);

  CLI::App* eval = app.add_subcommand(
      "eval", "validate prediction files and compute the metric suite");
  eval->add_option("--data", cfg.data_dir, "canonical dataset directory");
  eval->add_option("--pred", cfg.pred_files, "prediction interchange file(s)");
  add_cohort_options(eval, cfg);
  add_common_options(eval, cfg);

  CLI::App* analyze = app.add_subcommand(
      "analyze", "comparison tables, basket-component profiles, contribution splits");
  analyze->add_option("--data", cfg.data_dir, "canonical dataset directory");
  analyze->add_option("--report", cfg.report_files, "metrics report JSON file(s)");
  analyze->add_option("--pred", cfg.pred_files,
                      "prediction files for component/contribution analysis");
  add_cohort_options(analyze, cfg);
  add_common_options(analyze, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  CLI::App* active = nullptr;
  for (CLI::App* sub : {ingest, synth, run, eval, analyze}) {
    if (sub->parsed()) {
      cfg.subcommand = sub->get_name();
      active = sub;
    }
  }
  if (active != nullptr && (synth->parsed() || ingest->parsed())) {
    // --seed applies to generation when given on the command line.
    if (active->count("--seed") > 0) cfg.synth.seed = cfg.seed;
  }
  if (split_fractions.size() == 3) {
    cfg.preprocess.split_fractions = {split_fractions[0], split_fractions[1],
                                      split_fractions[2]};
  }

  try {
    nbr::run_command(cfg);
  } catch (const nbr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nbr::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nbr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
