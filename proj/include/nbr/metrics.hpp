#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbr/core.hpp"

namespace nbr {

// All top-k scorers read at most the first `capacity` items of the
// prediction; shorter item lists are legal and count as empty slots.

// |P ∩ T| / |T|. Truth must be non-empty.
double recall_at_k(const RankedPrediction& pred, const ItemSet& truth);

// Binary relevance, DCG discount log2(rank+1), ideal DCG truncated at min(|T|, K).
double ndcg_at_k(const RankedPrediction& pred, const ItemSet& truth);

// |P ∩ T| / K. Kept internal to the harness: proportional to recall per user,
// so it is only used to assert that identity, never reported.
double precision_at_k(const RankedPrediction& pred, const ItemSet& truth);

// φ(P, T): true iff the prediction captures at least one truth item.
bool hit_at_k(const RankedPrediction& pred, const ItemSet& truth);

// (RepR_u, ExplR_u) of the predicted basket: partition sizes over capacity K.
// Empty slots count toward neither ratio, so the pair may sum below 1.
std::pair<double, double> rep_expl_ratio(const RankedPrediction& pred,
                                         const ItemSet& repeat_set);

// |P ∩ T^rep| / |T^rep| using the whole prediction; absent when T^rep = ∅.
std::optional<double> recall_rep(const RankedPrediction& pred, const GroundTruth& truth);
// |P ∩ T^expl| / |T^expl|; absent when T^expl = ∅.
std::optional<double> recall_expl(const RankedPrediction& pred, const GroundTruth& truth);

std::optional<bool> hit_rep(const RankedPrediction& pred, const GroundTruth& truth);
std::optional<bool> hit_expl(const RankedPrediction& pred, const GroundTruth& truth);

// Cohort-level hit ratio over parallel prediction/truth lists.
double phr(const std::vector<RankedPrediction>& preds, const std::vector<ItemSet>& truths);

// Everything the harness measures for one (prediction, instance) pair.
// Fields without a defining population are absent, never zero-filled.
struct PerUserMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  bool hit = false;
  std::optional<double> recall_rep;
  std::optional<double> recall_expl;
  std::optional<bool> hit_rep;
  std::optional<bool> hit_expl;
  double rep_ratio = 0.0;
  double expl_ratio = 0.0;
  double precision = 0.0;  // internal, see precision_at_k
};

PerUserMetrics score_instance(const RankedPrediction& pred, const EvalInstance& inst);

// Population means for one (method, dataset, K) triple. Repeat metrics
// average over the N_r instances with repeat truth, explore metrics over N_e.
struct MetricsReport {
  std::string method;
  std::string dataset;
  int k = 0;
  std::size_t n = 0;
  std::size_t n_r = 0;
  std::size_t n_e = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  double phr = 0.0;
  std::optional<double> recall_rep;
  std::optional<double> recall_expl;
  std::optional<double> phr_rep;
  std::optional<double> phr_expl;
  double rep_ratio = 0.0;
  double expl_ratio = 0.0;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);

  // Row in the shared table schema:
  // method,dataset,K,recall,ndcg,phr,recall_rep,recall_expl,phr_rep,phr_expl,repr,explr
  std::string csv_row() const;
  static const char* csv_header();
};

MetricsReport aggregate(const std::vector<PerUserMetrics>& per_user,
                        const std::string& method, const std::string& dataset, int k);

// Matches predictions to cohort instances by (user id, target index), in
// cohort order; throws ValidationError(missing_instances) naming the first
// missing keys.
std::vector<const RankedPrediction*> match_predictions(
    const EvalCohort& cohort, const std::vector<RankedPrediction>& preds);

// Scores every cohort instance against its prediction (matched by user id and
// target index) and aggregates at each requested k by prefix truncation.
// Prediction capacities must cover max(ks).
std::vector<MetricsReport> evaluate_cohort(const EvalCohort& cohort,
                                           const std::vector<RankedPrediction>& preds,
                                           const std::string& method,
                                           const std::string& dataset,
                                           const std::vector<int>& ks, int workers = 1);

}  // namespace nbr
