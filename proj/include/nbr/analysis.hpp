#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nbr/core.hpp"
#include "nbr/metrics.hpp"

namespace nbr {

// What fills the predicted baskets: repeat/explore shares plus the
// method-independent ceiling min(|E^rep|, K)/K and the truth's own share.
struct ComponentProfile {
  std::string method;
  int k = 0;
  double mean_repr = 0.0;
  double mean_explr = 0.0;
  double upper_bound_repr = 0.0;
  double ground_truth_repr = 0.0;
};

ComponentProfile component_profile(const std::vector<RankedPrediction>& preds,
                                   const EvalCohort& cohort, const std::string& method,
                                   int k);

// Recall attribution: recall recomputed after deleting the explore items
// (recall_from_repeat) or the repeat items (recall_from_explore) from each
// prediction; ranks of the survivors are preserved. The two parts sum to
// recall_full exactly.
struct ContributionBreakdown {
  std::string method;
  int k = 0;
  double recall_full = 0.0;
  double recall_from_repeat = 0.0;
  double recall_from_explore = 0.0;
};

ContributionBreakdown contribution_decomposition(const std::vector<RankedPrediction>& preds,
                                                 const EvalCohort& cohort,
                                                 const std::string& method, int k);

// Method-by-metric table, one block per basket size.
struct ComparisonTable {
  std::string dataset;
  std::vector<MetricsReport> rows;  // sorted by k, input order within a block

  // All reports must describe the same dataset.
  static ComparisonTable build(const std::vector<MetricsReport>& reports);

  std::string to_csv() const;
  // Aligned text; the best value per metric within each k block is starred.
  std::string to_text() const;
};

// Plot payloads: {"series": [{"label", "values"}], "baseline_lines": {...}}.
nlohmann::json component_plot_json(const std::vector<ComponentProfile>& profiles);
nlohmann::json contribution_plot_json(const std::vector<ContributionBreakdown>& parts);

std::string component_profile_csv(const std::vector<ComponentProfile>& profiles);
std::string contribution_csv(const std::vector<ContributionBreakdown>& parts);

}  // namespace nbr
