#include "nbr/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "nbr/errors.hpp"

using nlohmann::json;

namespace nbr {

ComponentProfile component_profile(const std::vector<RankedPrediction>& preds,
                                   const EvalCohort& cohort, const std::string& method,
                                   int k) {
  const auto matched = match_predictions(cohort, preds);
  ComponentProfile profile;
  profile.method = method;
  profile.k = k;
  double repr = 0, explr = 0, bound = 0, truth = 0;
  for (std::size_t i = 0; i < cohort.instances.size(); ++i) {
    const EvalInstance& inst = cohort.instances[i];
    const auto [r, e] =
        rep_expl_ratio(truncate_prediction(*matched[i], k), inst.history.repeat_set());
    repr += r;
    explr += e;
    bound += static_cast<double>(std::min<std::size_t>(inst.history.repeat_set().size(),
                                                       static_cast<std::size_t>(k))) /
             static_cast<double>(k);
    truth += static_cast<double>(inst.truth.repeat_part.size()) /
             static_cast<double>(inst.truth.target.size());
  }
  const double n = static_cast<double>(cohort.instances.size());
  profile.mean_repr = repr / n;
  profile.mean_explr = explr / n;
  profile.upper_bound_repr = bound / n;
  profile.ground_truth_repr = truth / n;
  return profile;
}

ContributionBreakdown contribution_decomposition(const std::vector<RankedPrediction>& preds,
                                                 const EvalCohort& cohort,
                                                 const std::string& method, int k) {
  const auto matched = match_predictions(cohort, preds);
  ContributionBreakdown out;
  out.method = method;
  out.k = k;
  double full = 0, from_rep = 0, from_expl = 0;
  for (std::size_t i = 0; i < cohort.instances.size(); ++i) {
    const EvalInstance& inst = cohort.instances[i];
    const RankedPrediction pred = truncate_prediction(*matched[i], k);
    const ItemSet& repeat_set = inst.history.repeat_set();

    RankedPrediction repeat_only = pred;
    RankedPrediction explore_only = pred;
    repeat_only.items.clear();
    explore_only.items.clear();
    for (ItemId item : pred.items) {
      (item_set_contains(repeat_set, item) ? repeat_only : explore_only)
          .items.push_back(item);
    }
    repeat_only.scores.clear();
    explore_only.scores.clear();

    full += recall_at_k(pred, inst.truth.target);
    from_rep += recall_at_k(repeat_only, inst.truth.target);
    from_expl += recall_at_k(explore_only, inst.truth.target);
  }
  const double n = static_cast<double>(cohort.instances.size());
  out.recall_full = full / n;
  out.recall_from_repeat = from_rep / n;
  out.recall_from_explore = from_expl / n;
  return out;
}

ComparisonTable ComparisonTable::build(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) {
    throw DataError("comparison table needs at least one report");
  }
  ComparisonTable table;
  table.dataset = reports.front().dataset;
  for (const MetricsReport& r : reports) {
    if (r.dataset != table.dataset) {
      throw DataError("cannot mix datasets in one comparison table: '" + table.dataset +
                      "' vs '" + r.dataset + "'");
    }
  }
  table.rows = reports;
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const MetricsReport& a, const MetricsReport& b) { return a.k < b.k; });
  return table;
}

std::string ComparisonTable::to_csv() const {
  std::string out = MetricsReport::csv_header();
  out.push_back('\n');
  for (const MetricsReport& r : rows) {
    out += r.csv_row();
    out.push_back('\n');
  }
  return out;
}

namespace {

using Getter = std::optional<double> (*)(const MetricsReport&);

struct Column {
  const char* name;
  Getter get;
};

const Column kColumns[] = {
    {"recall", [](const MetricsReport& r) { return std::optional<double>(r.recall); }},
    {"ndcg", [](const MetricsReport& r) { return std::optional<double>(r.ndcg); }},
    {"phr", [](const MetricsReport& r) { return std::optional<double>(r.phr); }},
    {"recall-rep", [](const MetricsReport& r) { return r.recall_rep; }},
    {"recall-expl", [](const MetricsReport& r) { return r.recall_expl; }},
    {"phr-rep", [](const MetricsReport& r) { return r.phr_rep; }},
    {"phr-expl", [](const MetricsReport& r) { return r.phr_expl; }},
    {"repr", [](const MetricsReport& r) { return std::optional<double>(r.rep_ratio); }},
    {"explr", [](const MetricsReport& r) { return std::optional<double>(r.expl_ratio); }},
};

}  // namespace

std::string ComparisonTable::to_text() const {
  char buf[64];
  std::string out = "dataset: " + dataset + "\n";
  std::snprintf(buf, sizeof(buf), "%4s %-14s", "K", "method");
  out += buf;
  for (const Column& col : kColumns) {
    std::snprintf(buf, sizeof(buf), " %12s", col.name);
    out += buf;
  }
  out.push_back('\n');

  for (std::size_t i = 0; i < rows.size();) {
    std::size_t end = i;
    while (end < rows.size() && rows[end].k == rows[i].k) ++end;
    // Best value per metric within this basket-size block.
    std::vector<std::optional<double>> best(std::size(kColumns));
    for (std::size_t r = i; r < end; ++r) {
      for (std::size_t c = 0; c < std::size(kColumns); ++c) {
        const auto v = kColumns[c].get(rows[r]);
        if (v && (!best[c] || *v > *best[c])) best[c] = v;
      }
    }
    for (std::size_t r = i; r < end; ++r) {
      std::snprintf(buf, sizeof(buf), "%4d %-14s", rows[r].k, rows[r].method.c_str());
      out += buf;
      for (std::size_t c = 0; c < std::size(kColumns); ++c) {
        const auto v = kColumns[c].get(rows[r]);
        if (!v) {
          std::snprintf(buf, sizeof(buf), " %12s", "-");
        } else {
          const bool is_best = best[c] && *v == *best[c];
          std::snprintf(buf, sizeof(buf), " %11.4f%s", *v, is_best ? "*" : " ");
        }
        out += buf;
      }
      out.push_back('\n');
    }
    i = end;
  }
  return out;
}

nlohmann::json component_plot_json(const std::vector<ComponentProfile>& profiles) {
  if (profiles.empty()) {
    throw DataError("component plot needs at least one profile");
  }
  json series = json::array();
  for (const ComponentProfile& p : profiles) {
    if (p.k != profiles.front().k) {
      throw DataError("component plot profiles must share the same basket size");
    }
    series.push_back(json{{"label", p.method}, {"values", {p.mean_repr, p.mean_explr}}});
  }
  return json{{"k", profiles.front().k},
              {"series", std::move(series)},
              {"baseline_lines",
               {{"ground_truth_repr", profiles.front().ground_truth_repr},
                {"upper_bound_repr", profiles.front().upper_bound_repr}}}};
}

nlohmann::json contribution_plot_json(const std::vector<ContributionBreakdown>& parts) {
  if (parts.empty()) {
    throw DataError("contribution plot needs at least one breakdown");
  }
  json series = json::array();
  for (const ContributionBreakdown& p : parts) {
    if (p.k != parts.front().k) {
      throw DataError("contribution plot breakdowns must share the same basket size");
    }
    series.push_back(json{{"label", p.method},
                          {"values", {p.recall_from_repeat, p.recall_from_explore}}});
  }
  return json{{"k", parts.front().k}, {"series", std::move(series)}};
}

std::string component_profile_csv(const std::vector<ComponentProfile>& profiles) {
  std::string out = "method,K,repr,explr,upper_bound_repr,ground_truth_repr\n";
  char buf[160];
  for (const ComponentProfile& p : profiles) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f\n", p.method.c_str(), p.k,
                  p.mean_repr, p.mean_explr, p.upper_bound_repr, p.ground_truth_repr);
    out += buf;
  }
  return out;
}

std::string contribution_csv(const std::vector<ContributionBreakdown>& parts) {
  std::string out = "method,K,recall_full,recall_from_repeat,recall_from_explore\n";
  char buf[160];
  for (const ContributionBreakdown& p : parts) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f\n", p.method.c_str(), p.k,
                  p.recall_full, p.recall_from_repeat, p.recall_from_explore);
    out += buf;
  }
  return out;
}

}  // namespace nbr
