#include "nbr/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "nbr/analysis.hpp"
#include "nbr/detail/io_util.hpp"
#include "nbr/errors.hpp"
#include "nbr/metrics.hpp"
#include "nbr/predictions_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nbr {

namespace {

json tifuknn_json(const TifuknnParams& p) {
  return json{{"k_neighbors", p.k_neighbors},
              {"group_size", p.group_size},
              {"within_decay", p.within_decay},
              {"group_decay", p.group_decay},
              {"fusion_alpha", p.fusion_alpha}};
}

json upcf_json(const UpcfParams& p) {
  return json{{"recency_window", p.recency_window},
              {"locality", p.locality},
              {"asymmetry", p.asymmetry}};
}

void tifuknn_from_json(const json& j, TifuknnParams& p) {
  p.k_neighbors = j.value("k_neighbors", p.k_neighbors);
  p.group_size = j.value("group_size", p.group_size);
  p.within_decay = j.value("within_decay", p.within_decay);
  p.group_decay = j.value("group_decay", p.group_decay);
  p.fusion_alpha = j.value("fusion_alpha", p.fusion_alpha);
}

void upcf_from_json(const json& j, UpcfParams& p) {
  p.recency_window = j.value("recency_window", p.recency_window);
  p.locality = j.value("locality", p.locality);
  p.asymmetry = j.value("asymmetry", p.asymmetry);
}

void echo_config(const RunConfig& cfg) {
  ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / "resolved_config.json").string(),
                                 cfg.to_json().dump(2) + "\n");
}

void require_out_dir(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) {
    throw ConfigError("--out directory is required");
  }
  ioutil::ensure_directory(cfg.out_dir);
}

void validate_k_list(const std::vector<int>& ks) {
  if (ks.empty()) throw ConfigError("at least one --k value is required");
  for (int k : ks) {
    if (k < 1) throw ConfigError("--k values must be >= 1");
  }
}

DatasetBundle load_bundle(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) {
    throw ConfigError("--data directory (canonical dataset) is required");
  }
  return load_canonical(resolve_data_path(cfg.data_dir));
}

std::vector<std::string> expand_methods(const std::vector<std::string>& methods) {
  std::vector<std::string> out;
  for (const std::string& m : methods) {
    if (m == "all-frequency") {
      out.insert(out.end(), {"g-topfreq", "p-topfreq", "gp-topfreq"});
    } else if (m == "all") {
      out.insert(out.end(), {"g-topfreq", "p-topfreq", "gp-topfreq", "tifuknn", "upcf"});
    } else {
      out.push_back(baseline_name(parse_baseline_name(m)));
    }
  }
  // de-duplicate, first occurrence wins
  std::vector<std::string> unique;
  for (const std::string& m : out) {
    if (std::find(unique.begin(), unique.end(), m) == unique.end()) unique.push_back(m);
  }
  return unique;
}

std::string prediction_file_name(const std::string& method) {
  return "predictions_" + method + ".jsonl";
}

// Validation split doubles as the target segment when selecting
// hyperparameters: train stays history, val baskets become the targets.
DatasetBundle validation_view(const DatasetBundle& bundle) {
  DatasetBundle view;
  view.name = bundle.name;
  view.vocab = bundle.vocab;
  for (const UserSegments& seg : bundle.users) {
    UserSegments v;
    v.user_id = seg.user_id;
    v.train = seg.train;
    v.test = seg.val;
    view.users.push_back(std::move(v));
  }
  return view;
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
  if (path.empty()) return path;
  const char* root = std::getenv("NBR_DATA_ROOT");
  if (root == nullptr || *root == '\0') return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(root) / p).string();
}

void RunConfig::apply_json(const json& j) {
  try {
    input_path = j.value("input", input_path);
    schema = j.value("schema", schema);
    data_dir = j.value("data", data_dir);
    out_dir = j.value("out", out_dir);
    dataset_name = j.value("name", dataset_name);
    if (j.contains("methods")) methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("k")) k_list = j.at("k").get<std::vector<int>>();
    preprocess.min_baskets_per_user =
        j.value("min_baskets", preprocess.min_baskets_per_user);
    preprocess.max_baskets_per_user =
        j.value("max_baskets", preprocess.max_baskets_per_user);
    preprocess.interaction_coverage = j.value("coverage", preprocess.interaction_coverage);
    preprocess.filter_by_basket_size =
        j.value("filter_by_basket_size", preprocess.filter_by_basket_size);
    if (j.contains("split_fractions")) {
      const auto& f = j.at("split_fractions");
      preprocess.split_fractions = {f.at(0).get<double>(), f.at(1).get<double>(),
                                    f.at(2).get<double>()};
    }
    if (j.contains("max_days")) max_days = j.at("max_days").get<std::int64_t>();
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      synth.n_users = s.value("n_users", synth.n_users);
      synth.n_items = s.value("n_items", synth.n_items);
      synth.min_baskets = s.value("min_baskets", synth.min_baskets);
      synth.max_baskets = s.value("max_baskets", synth.max_baskets);
      synth.min_basket_size = s.value("min_basket_size", synth.min_basket_size);
      synth.max_basket_size = s.value("max_basket_size", synth.max_basket_size);
      synth.repeat_prob = s.value("repeat_prob", synth.repeat_prob);
      synth.popularity_exponent =
          s.value("popularity_exponent", synth.popularity_exponent);
      synth.seed = s.value("seed", synth.seed);
      synth.name = s.value("name", synth.name);
    }
    if (j.contains("tifuknn")) tifuknn_from_json(j.at("tifuknn"), tifuknn);
    if (j.contains("upcf")) upcf_from_json(j.at("upcf"), upcf);
    grid = j.value("grid", grid);
    target_mode = j.value("target", target_mode);
    include_validation_history =
        j.value("include_validation_history", include_validation_history);
    seed = j.value("seed", seed);
    workers = j.value("workers", workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config file: ") + e.what());
  }
}

json RunConfig::to_json() const {
  json j{{"subcommand", subcommand},
         {"schema", schema},
         {"input", input_path},
         {"data", data_dir},
         {"out", out_dir},
         {"name", dataset_name},
         {"methods", methods},
         {"pred_files", pred_files},
         {"report_files", report_files},
         {"k", k_list},
         {"min_baskets", preprocess.min_baskets_per_user},
         {"max_baskets", preprocess.max_baskets_per_user},
         {"coverage", preprocess.interaction_coverage},
         {"filter_by_basket_size", preprocess.filter_by_basket_size},
         {"split_fractions", preprocess.split_fractions},
         {"synth", synth.to_json()},
         {"tifuknn", tifuknn_json(tifuknn)},
         {"upcf", upcf_json(upcf)},
         {"grid", grid},
         {"target", target_mode},
         {"include_validation_history", include_validation_history},
         {"seed", seed},
         {"workers", workers}};
  if (max_days) j["max_days"] = *max_days;
  return j;
}

CohortOptions RunConfig::cohort_options() const {
  CohortOptions opts;
  if (target_mode == "rolling") {
    opts.target = TargetMode::rolling;
  } else if (target_mode == "first-test-basket") {
    opts.target = TargetMode::first_test_basket;
  } else {
    throw ConfigError("unknown --target mode '" + target_mode +
                      "' (expected rolling or first-test-basket)");
  }
  opts.include_validation_history = include_validation_history;
  return opts;
}

void cmd_ingest(const RunConfig& cfg) {
  require_out_dir(cfg);
  if (cfg.schema == "synthetic") {
    RunConfig synth_cfg = cfg;
    synth_cfg.subcommand = "synth";
    cmd_synth(synth_cfg);
    return;
  }
  const SourceSchema schema = parse_schema_name(cfg.schema);
  if (cfg.input_path.empty()) {
    throw ConfigError("--in source path is required for ingest");
  }
  cfg.preprocess.validate();

  ParseOptions popts;
  popts.max_days = cfg.max_days;
  const ParseResult parsed =
      parse_source(resolve_data_path(cfg.input_path), schema, popts);
  if (parsed.dropped_rows > 0) {
    std::cerr << "warning: dropped " << parsed.dropped_rows << " malformed rows\n";
  }
  const RawUserMap raw = build_baskets(parsed.rows);
  const RawUserMap filtered = filter_dataset(raw, cfg.preprocess);
  const std::string name =
      cfg.dataset_name.empty() ? std::string(schema_name(schema)) : cfg.dataset_name;
  const SplitOutcome split = split_per_user(filtered, cfg.preprocess, name);
  if (split.dropped_users > 0) {
    std::cerr << "warning: dropped " << split.dropped_users
              << " users with no train baskets after the split\n";
  }
  write_canonical(split.bundle, cfg.out_dir);
  echo_config(cfg);
  std::cout << stats_table(split.bundle.stats, split.bundle.name);
}

void cmd_synth(const RunConfig& cfg) {
  require_out_dir(cfg);
  SynthConfig synth = cfg.synth;
  if (!cfg.dataset_name.empty()) synth.name = cfg.dataset_name;
  const DatasetBundle bundle = generate(synth, cfg.workers);
  write_canonical(bundle, cfg.out_dir);
  echo_config(cfg);
  std::cout << stats_table(bundle.stats, bundle.name);
}

namespace {

struct SearchPoint {
  BaselineParams params;
  json describe;
};

std::vector<SearchPoint> small_grid(BaselineMethod method, const BaselineParams& base) {
  std::vector<SearchPoint> points;
  if (method == BaselineMethod::tifuknn) {
    for (int k_neighbors : {100, 300}) {
      for (double within_decay : {0.7, 0.9}) {
        for (double alpha : {0.3, 0.7}) {
          SearchPoint p{base, {}};
          p.params.tifuknn.k_neighbors = k_neighbors;
          p.params.tifuknn.within_decay = within_decay;
          p.params.tifuknn.fusion_alpha = alpha;
          p.describe = tifuknn_json(p.params.tifuknn);
          points.push_back(std::move(p));
        }
      }
    }
  } else if (method == BaselineMethod::upcf) {
    for (int window : {1, 5, 25}) {
      for (int locality : {1, 5}) {
        SearchPoint p{base, {}};
        p.params.upcf.recency_window = window;
        p.params.upcf.locality = locality;
        p.describe = upcf_json(p.params.upcf);
        points.push_back(std::move(p));
      }
    }
  } else {
    throw ConfigError("grid search only applies to tifuknn and upcf");
  }
  return points;
}

}  // namespace

void cmd_run(const RunConfig& cfg) {
  require_out_dir(cfg);
  validate_k_list(cfg.k_list);
  if (cfg.methods.empty()) {
    throw ConfigError("--method is required (or 'all-frequency' / 'all')");
  }
  const DatasetBundle bundle = load_bundle(cfg);
  const EvalCohort cohort = build_eval_cohort(bundle, cfg.cohort_options());
  const int k_max = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());

  BaselineParams params;
  params.tifuknn = cfg.tifuknn;
  params.upcf = cfg.upcf;

  for (const std::string& method_name : expand_methods(cfg.methods)) {
    const BaselineMethod method = parse_baseline_name(method_name);
    const bool searchable =
        method == BaselineMethod::tifuknn || method == BaselineMethod::upcf;

    PredictionFileHeader header;
    header.method = method_name;
    header.dataset = bundle.name;
    header.vocab_sha256 = bundle.vocab.sha256();
    header.k = k_max;

    if (cfg.grid == "small" && searchable) {
      const std::vector<SearchPoint> points = small_grid(method, params);
      const DatasetBundle val_view = validation_view(bundle);
      const EvalCohort val_cohort = build_eval_cohort(val_view, {});

      json manifest{{"method", method_name}, {"k", k_max}, {"points", json::array()}};
      std::size_t best = 0;
      double best_recall = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto val_preds =
            predict_cohort(method, val_view, val_cohort, k_max, points[i].params,
                           cfg.workers);
        const auto val_reports = evaluate_cohort(val_cohort, val_preds, method_name,
                                                 bundle.name, {k_max}, cfg.workers);
        const double val_recall = val_reports.front().recall;

        const auto test_preds =
            predict_cohort(method, bundle, cohort, k_max, points[i].params, cfg.workers);
        const std::string file =
            "predictions_" + method_name + "_grid" + std::to_string(i) + ".jsonl";
        write_predictions(test_preds, header, (fs::path(cfg.out_dir) / file).string());

        manifest["points"].push_back(json{{"params", points[i].describe},
                                          {"val_recall", val_recall},
                                          {"file", file}});
        if (val_recall > best_recall) {
          best_recall = val_recall;
          best = i;
        }
        if (i == best) {
          write_predictions(
              test_preds, header,
              (fs::path(cfg.out_dir) / prediction_file_name(method_name)).string());
        }
      }
      manifest["selected"] = json{{"index", best},
                                  {"params", points[best].describe},
                                  {"val_recall", best_recall},
                                  {"file", prediction_file_name(method_name)}};
      ioutil::write_text_file_atomic(
          (fs::path(cfg.out_dir) / ("grid_" + method_name + ".json")).string(),
          manifest.dump(2) + "\n");
    } else {
      const auto preds = predict_cohort(method, bundle, cohort, k_max, params, cfg.workers);
      write_predictions(preds, header,
                        (fs::path(cfg.out_dir) / prediction_file_name(method_name)).string());
    }
  }
  echo_config(cfg);
}

void cmd_eval(const RunConfig& cfg) {
  require_out_dir(cfg);
  validate_k_list(cfg.k_list);
  if (cfg.pred_files.empty()) {
    throw ConfigError("--pred prediction file(s) required for eval");
  }
  const DatasetBundle bundle = load_bundle(cfg);
  const EvalCohort cohort = build_eval_cohort(bundle, cfg.cohort_options());
  const int k_max = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());

  std::string csv = MetricsReport::csv_header();
  csv.push_back('\n');
  for (const std::string& file : cfg.pred_files) {
    const std::string path = resolve_data_path(file);
    const PredictionFileHeader header = read_prediction_header(path);
    if (header.k < k_max) {
      throw ConfigError("prediction file " + file + " holds top-" +
                        std::to_string(header.k) + " baskets; cannot evaluate at k=" +
                        std::to_string(k_max));
    }
    const auto preds = read_and_validate(path, bundle, cohort);
    const auto reports =
        evaluate_cohort(cohort, preds, header.method, bundle.name, cfg.k_list, cfg.workers);
    for (const MetricsReport& report : reports) {
      const std::string name =
          "metrics_" + report.method + "_k" + std::to_string(report.k) + ".json";
      ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / name).string(),
                                     report.to_json().dump(2) + "\n");
      csv += report.csv_row();
      csv.push_back('\n');
      std::cout << report.method << " k=" << report.k << " recall=" << report.recall
                << " ndcg=" << report.ndcg << " phr=" << report.phr << "\n";
    }
  }
  ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / "metrics.csv").string(), csv);
  echo_config(cfg);
}

void cmd_analyze(const RunConfig& cfg) {
  require_out_dir(cfg);
  validate_k_list(cfg.k_list);
  if (cfg.report_files.empty()) {
    throw ConfigError("--report metrics file(s) required for analyze");
  }
  const DatasetBundle bundle = load_bundle(cfg);

  std::vector<MetricsReport> reports;
  for (const std::string& file : cfg.report_files) {
    const json j = ioutil::parse_json_line(
        ioutil::read_text_file(resolve_data_path(file)), "metrics report");
    reports.push_back(MetricsReport::from_json(j));
  }
  for (const MetricsReport& r : reports) {
    if (r.dataset != bundle.name) {
      throw DataError("report for dataset '" + r.dataset +
                      "' does not match loaded dataset '" + bundle.name + "'");
    }
  }
  const ComparisonTable table = ComparisonTable::build(reports);
  ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / "comparison.csv").string(),
                                 table.to_csv());
  ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / "comparison.txt").string(),
                                 table.to_text());
  {
    json plot{{"dataset", table.dataset}, {"blocks", json::array()}};
    for (std::size_t i = 0; i < table.rows.size();) {
      std::size_t end = i;
      json series = json::array();
      while (end < table.rows.size() && table.rows[end].k == table.rows[i].k) {
        const MetricsReport& r = table.rows[end];
        series.push_back(
            json{{"label", r.method}, {"values", {r.recall, r.ndcg, r.phr}}});
        ++end;
      }
      plot["blocks"].push_back(json{{"k", table.rows[i].k},
                                    {"columns", {"recall", "ndcg", "phr"}},
                                    {"series", std::move(series)}});
      i = end;
    }
    ioutil::write_text_file_atomic((fs::path(cfg.out_dir) / "comparison_plot.json").string(),
                                   plot.dump(2) + "\n");
  }
  std::cout << table.to_text();

  if (!cfg.pred_files.empty()) {
    const EvalCohort cohort = build_eval_cohort(bundle, cfg.cohort_options());
    for (int k : cfg.k_list) {
      std::vector<ComponentProfile> profiles;
      std::vector<ContributionBreakdown> parts;
      for (const std::string& file : cfg.pred_files) {
        const std::string path = resolve_data_path(file);
        const PredictionFileHeader header = read_prediction_header(path);
        if (header.k < k) {
          throw ConfigError("prediction file " + file + " holds top-" +
                            std::to_string(header.k) + " baskets; cannot analyze at k=" +
                            std::to_string(k));
        }
        const auto preds = read_and_validate(path, bundle, cohort);
        profiles.push_back(component_profile(preds, cohort, header.method, k));
        parts.push_back(contribution_decomposition(preds, cohort, header.method, k));
      }
      const std::string suffix = "_k" + std::to_string(k);
      ioutil::write_text_file_atomic(
          (fs::path(cfg.out_dir) / ("component_profile" + suffix + ".csv")).string(),
          component_profile_csv(profiles));
      ioutil::write_text_file_atomic(
          (fs::path(cfg.out_dir) / ("component_plot" + suffix + ".json")).string(),
          component_plot_json(profiles).dump(2) + "\n");
      ioutil::write_text_file_atomic(
          (fs::path(cfg.out_dir) / ("contribution" + suffix + ".csv")).string(),
          contribution_csv(parts));
      ioutil::write_text_file_atomic(
          (fs::path(cfg.out_dir) / ("contribution_plot" + suffix + ".json")).string(),
          contribution_plot_json(parts).dump(2) + "\n");
    }
  }
  echo_config(cfg);
}

void run_command(const RunConfig& cfg) {
  if (cfg.subcommand == "ingest") {
    cmd_ingest(cfg);
  } else if (cfg.subcommand == "synth") {
    cmd_synth(cfg);
  } else if (cfg.subcommand == "run") {
    cmd_run(cfg);
  } else if (cfg.subcommand == "eval") {
    cmd_eval(cfg);
  } else if (cfg.subcommand == "analyze") {
    cmd_analyze(cfg);
  } else {
    throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
  }
}

}  // namespace nbr
