#include "nbr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "nbr/detail/parallel.hpp"
#include "nbr/errors.hpp"

namespace nbr {

namespace {

// Number of ranked items the scorers may look at.
std::size_t effective_length(const RankedPrediction& pred) {
  return std::min<std::size_t>(pred.items.size(), static_cast<std::size_t>(pred.capacity));
}

std::size_t count_hits(const RankedPrediction& pred, const ItemSet& truth) {
  const std::size_t len = effective_length(pred);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < len; ++i) {
    if (item_set_contains(truth, pred.items[i])) ++hits;
  }
  return hits;
}

void require_truth(const ItemSet& truth, const char* op) {
  if (truth.empty()) {
    throw DataError(std::string(op) + " is undefined for an empty ground-truth basket");
  }
}

void require_capacity(const RankedPrediction& pred) {
  if (pred.capacity < 1) {
    throw DataError("prediction capacity must be >= 1 (user " + pred.user_id + ")");
  }
}

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string format_cell(const std::optional<double>& v) {
  return v ? format_cell(*v) : std::string();
}

}  // namespace

double recall_at_k(const RankedPrediction& pred, const ItemSet& truth) {
  require_capacity(pred);
  require_truth(truth, "recall");
  return static_cast<double>(count_hits(pred, truth)) / static_cast<double>(truth.size());
}

double ndcg_at_k(const RankedPrediction& pred, const ItemSet& truth) {
  require_capacity(pred);
  require_truth(truth, "ndcg");
  const std::size_t len = effective_length(pred);
  double dcg = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    if (item_set_contains(truth, pred.items[i])) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  const std::size_t ideal_len =
      std::min<std::size_t>(truth.size(), static_cast<std::size_t>(pred.capacity));
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal_len; ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double precision_at_k(const RankedPrediction& pred, const ItemSet& truth) {
  require_capacity(pred);
  require_truth(truth, "precision");
  return static_cast<double>(count_hits(pred, truth)) / static_cast<double>(pred.capacity);
}

bool hit_at_k(const RankedPrediction& pred, const ItemSet& truth) {
  const std::size_t len = effective_length(pred);
  for (std::size_t i = 0; i < len; ++i) {
    if (item_set_contains(truth, pred.items[i])) return true;
  }
  return false;
}

std::pair<double, double> rep_expl_ratio(const RankedPrediction& pred,
                                         const ItemSet& repeat_set) {
  require_capacity(pred);
  const std::size_t len = effective_length(pred);
  std::size_t rep = 0;
  for (std::size_t i = 0; i < len; ++i) {
    if (item_set_contains(repeat_set, pred.items[i])) ++rep;
  }
  const double k = static_cast<double>(pred.capacity);
  return {static_cast<double>(rep) / k, static_cast<double>(len - rep) / k};
}

std::optional<double> recall_rep(const RankedPrediction& pred, const GroundTruth& truth) {
  if (truth.repeat_part.empty()) return std::nullopt;
  require_capacity(pred);
  return static_cast<double>(count_hits(pred, truth.repeat_part)) /
         static_cast<double>(truth.repeat_part.size());
}

std::optional<double> recall_expl(const RankedPrediction& pred, const GroundTruth& truth) {
  if (truth.explore_part.empty()) return std::nullopt;
  require_capacity(pred);
  return static_cast<double>(count_hits(pred, truth.explore_part)) /
         static_cast<double>(truth.explore_part.size());
}

std::optional<bool> hit_rep(const RankedPrediction& pred, const GroundTruth& truth) {
  if (truth.repeat_part.empty()) return std::nullopt;
  return hit_at_k(pred, truth.repeat_part);
}

std::optional<bool> hit_expl(const RankedPrediction& pred, const GroundTruth& truth) {
  if (truth.explore_part.empty()) return std::nullopt;
  return hit_at_k(pred, truth.explore_part);
}

double phr(const std::vector<RankedPrediction>& preds, const std::vector<ItemSet>& truths) {
  if (preds.empty() || preds.size() != truths.size()) {
    throw DataError("phr needs a non-empty list of matching (prediction, truth) pairs");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require_truth(truths[i], "phr");
    if (hit_at_k(preds[i], truths[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

PerUserMetrics score_instance(const RankedPrediction& pred, const EvalInstance& inst) {
  PerUserMetrics m;
  m.recall = recall_at_k(pred, inst.truth.target);
  m.ndcg = ndcg_at_k(pred, inst.truth.target);
  m.hit = hit_at_k(pred, inst.truth.target);
  m.precision = precision_at_k(pred, inst.truth.target);
  m.recall_rep = recall_rep(pred, inst.truth);
  m.recall_expl = recall_expl(pred, inst.truth);
  m.hit_rep = hit_rep(pred, inst.truth);
  m.hit_expl = hit_expl(pred, inst.truth);
  std::tie(m.rep_ratio, m.expl_ratio) = rep_expl_ratio(pred, inst.history.repeat_set());
  return m;
}

MetricsReport aggregate(const std::vector<PerUserMetrics>& per_user,
                        const std::string& method, const std::string& dataset, int k) {
  if (per_user.empty()) {
    throw DataError("cannot aggregate an empty metrics list");
  }
  MetricsReport r;
  r.method = method;
  r.dataset = dataset;
  r.k = k;
  r.n = per_user.size();

  double recall = 0, ndcg = 0, hits = 0, repr = 0, explr = 0;
  double rec_rep = 0, rec_expl = 0, hit_rep_sum = 0, hit_expl_sum = 0;
  for (const PerUserMetrics& m : per_user) {
    recall += m.recall;
    ndcg += m.ndcg;
    hits += m.hit ? 1.0 : 0.0;
    repr += m.rep_ratio;
    explr += m.expl_ratio;
    if (m.recall_rep) {
      ++r.n_r;
      rec_rep += *m.recall_rep;
      hit_rep_sum += *m.hit_rep ? 1.0 : 0.0;
    }
    if (m.recall_expl) {
      ++r.n_e;
      rec_expl += *m.recall_expl;
      hit_expl_sum += *m.hit_expl ? 1.0 : 0.0;
    }
  }
  const double n = static_cast<double>(r.n);
  r.recall = recall / n;
  r.ndcg = ndcg / n;
  r.phr = hits / n;
  r.rep_ratio = repr / n;
  r.expl_ratio = explr / n;
  if (r.n_r > 0) {
    r.recall_rep = rec_rep / static_cast<double>(r.n_r);
    r.phr_rep = hit_rep_sum / static_cast<double>(r.n_r);
  }
  if (r.n_e > 0) {
    r.recall_expl = rec_expl / static_cast<double>(r.n_e);
    r.phr_expl = hit_expl_sum / static_cast<double>(r.n_e);
  }
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j{
      {"method", method},     {"dataset", dataset},
      {"k", k},               {"n", n},
      {"n_r", n_r},           {"n_e", n_e},
      {"recall", recall},     {"ndcg", ndcg},
      {"phr", phr},           {"repr", rep_ratio},
      {"explr", expl_ratio},
  };
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("recall_rep", recall_rep);
  put("recall_expl", recall_expl);
  put("phr_rep", phr_rep);
  put("phr_expl", phr_expl);
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.k = j.at("k").get<int>();
    r.n = j.at("n").get<std::size_t>();
    r.n_r = j.at("n_r").get<std::size_t>();
    r.n_e = j.at("n_e").get<std::size_t>();
    r.recall = j.at("recall").get<double>();
    r.ndcg = j.at("ndcg").get<double>();
    r.phr = j.at("phr").get<double>();
    r.rep_ratio = j.at("repr").get<double>();
    r.expl_ratio = j.at("explr").get<double>();
    auto get = [&j](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<double>();
    };
    r.recall_rep = get("recall_rep");
    r.recall_expl = get("recall_expl");
    r.phr_rep = get("phr_rep");
    r.phr_expl = get("phr_expl");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad metrics report JSON: ") + e.what());
  }
  return r;
}

const char* MetricsReport::csv_header() {
  return "method,dataset,K,recall,ndcg,phr,recall_rep,recall_expl,phr_rep,phr_expl,repr,explr";
}

std::string MetricsReport::csv_row() const {
  std::string row = method + "," + dataset + "," + std::to_string(k);
  row += "," + format_cell(recall);
  row += "," + format_cell(ndcg);
  row += "," + format_cell(phr);
  row += "," + format_cell(recall_rep);
  row += "," + format_cell(recall_expl);
  row += "," + format_cell(phr_rep);
  row += "," + format_cell(phr_expl);
  row += "," + format_cell(rep_ratio);
  row += "," + format_cell(expl_ratio);
  return row;
}

std::vector<const RankedPrediction*> match_predictions(
    const EvalCohort& cohort, const std::vector<RankedPrediction>& preds) {
  std::map<std::pair<std::string, int>, const RankedPrediction*> by_key;
  for (const RankedPrediction& p : preds) {
    by_key[{p.user_id, p.target_index}] = &p;
  }
  std::vector<const RankedPrediction*> matched(cohort.instances.size(), nullptr);
  std::string missing;
  std::size_t missing_count = 0;
  for (std::size_t i = 0; i < cohort.instances.size(); ++i) {
    const EvalInstance& inst = cohort.instances[i];
    auto it = by_key.find({inst.history.user_id(), inst.target_index});
    if (it == by_key.end()) {
      if (missing_count < 10) {
        missing += (missing.empty() ? "" : ", ") + inst.history.user_id() + "#" +
                   std::to_string(inst.target_index);
      }
      ++missing_count;
    } else {
      matched[i] = it->second;
    }
  }
  if (missing_count > 0) {
    throw ValidationError(ValidationError::Code::missing_instances,
                          std::to_string(missing_count) +
                              " cohort instances lack predictions, first: " + missing);
  }
  return matched;
}

std::vector<MetricsReport> evaluate_cohort(const EvalCohort& cohort,
                                           const std::vector<RankedPrediction>& preds,
                                           const std::string& method,
                                           const std::string& dataset,
                                           const std::vector<int>& ks, int workers) {
  if (cohort.instances.empty()) {
    throw DataError("cannot evaluate an empty cohort");
  }
  if (ks.empty()) {
    throw ConfigError("no k values requested");
  }
  const std::vector<const RankedPrediction*> matched = match_predictions(cohort, preds);
  const int k_max = *std::max_element(ks.begin(), ks.end());
  for (const RankedPrediction* p : matched) {
    if (p->capacity < k_max) {
      throw ConfigError("prediction capacity " + std::to_string(p->capacity) +
                        " below requested k=" + std::to_string(k_max) + " (user " +
                        p->user_id + ")");
    }
  }

  std::vector<std::vector<PerUserMetrics>> per_k(ks.size());
  for (auto& v : per_k) v.resize(cohort.instances.size());
  parallel_for(cohort.instances.size(), workers, [&](std::size_t i) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      per_k[ki][i] = score_instance(truncate_prediction(*matched[i], ks[ki]),
                                    cohort.instances[i]);
    }
  });

  std::vector<MetricsReport> reports;
  reports.reserve(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    reports.push_back(aggregate(per_k[ki], method, dataset, ks[ki]));
  }
  return reports;
}

}  // namespace nbr
