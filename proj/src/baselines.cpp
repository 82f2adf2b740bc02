#include "nbr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <unordered_map>

#include "nbr/detail/parallel.hpp"
#include "nbr/errors.hpp"

namespace nbr {

namespace {

// Shared rank rule: score descending, ties by ascending item id.
template <typename Score>
std::vector<ItemId> top_k_items(std::vector<std::pair<ItemId, Score>> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t len = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k));
  std::vector<ItemId> items(len);
  for (std::size_t i = 0; i < len; ++i) items[i] = scored[i].first;
  return items;
}

std::vector<Basket> fit_history_baskets(const UserSegments& seg) {
  std::vector<Basket> baskets = seg.train;
  baskets.insert(baskets.end(), seg.val.begin(), seg.val.end());
  return baskets;
}

double sparse_dot(const SparseVec& a, const SparseVec& b) {
  double dot = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return dot;
}

double sparse_norm_sq(const SparseVec& v) {
  double sum = 0.0;
  for (const auto& [item, value] : v) sum += value * value;
  return sum;
}

}  // namespace

// ------------------------------------------------------------- frequency

GlobalFreqModel GlobalFreqModel::fit(const DatasetBundle& bundle) {
  std::vector<std::int64_t> counts(bundle.vocab.size(), 0);
  for (const UserSegments& seg : bundle.users) {
    for (const std::vector<Basket>* part : {&seg.train, &seg.val}) {
      for (const Basket& basket : *part) {
        for (ItemId item : basket.items) ++counts[static_cast<std::size_t>(item)];
      }
    }
  }
  std::vector<std::pair<ItemId, std::int64_t>> scored;
  scored.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    scored.emplace_back(static_cast<ItemId>(i), counts[i]);
  }
  GlobalFreqModel model;
  model.ranked_items = top_k_items(std::move(scored), static_cast<int>(counts.size()));
  return model;
}

RankedPrediction g_topfreq(const GlobalFreqModel& model, int k) {
  if (k < 1) throw ConfigError("basket size k must be >= 1");
  RankedPrediction pred;
  pred.capacity = k;
  const std::size_t len =
      std::min<std::size_t>(model.ranked_items.size(), static_cast<std::size_t>(k));
  pred.items.assign(model.ranked_items.begin(), model.ranked_items.begin() + len);
  return pred;
}

PersonalFreqTable PersonalFreqTable::from_history(const UserHistory& history) {
  std::map<ItemId, int> counts;
  for (const Basket& basket : history.baskets()) {
    for (ItemId item : basket.items) ++counts[item];
  }
  PersonalFreqTable table;
  table.counts.assign(counts.begin(), counts.end());
  return table;
}

RankedPrediction p_topfreq(const PersonalFreqTable& table, int k) {
  if (k < 1) throw ConfigError("basket size k must be >= 1");
  RankedPrediction pred;
  pred.capacity = k;
  pred.items = top_k_items(table.counts, k);
  return pred;
}

RankedPrediction gp_topfreq(const PersonalFreqTable& table, const GlobalFreqModel& model,
                            int k) {
  RankedPrediction pred = p_topfreq(table, k);
  if (static_cast<int>(pred.items.size()) < k) {
    ItemSet present = make_item_set(pred.items);
    for (ItemId item : model.ranked_items) {
      if (static_cast<int>(pred.items.size()) >= k) break;
      if (!item_set_contains(present, item)) pred.items.push_back(item);
    }
  }
  return pred;
}

// ------------------------------------------------------------- TIFUKNN

void TifuknnParams::validate() const {
  if (k_neighbors < 1) throw ConfigError("tifuknn: k_neighbors must be >= 1");
  if (group_size < 1) throw ConfigError("tifuknn: group_size must be >= 1");
  if (!(within_decay > 0.0 && within_decay <= 1.0)) {
    throw ConfigError("tifuknn: within_decay must be in (0, 1]");
  }
  if (!(group_decay > 0.0 && group_decay <= 1.0)) {
    throw ConfigError("tifuknn: group_decay must be in (0, 1]");
  }
  if (fusion_alpha < 0.0 || fusion_alpha > 1.0) {
    throw ConfigError("tifuknn: fusion_alpha must be in [0, 1]");
  }
}

SparseVec build_pif(const UserHistory& history, int group_size, double within_decay,
                    double group_decay) {
  if (group_size < 1) throw ConfigError("tifuknn: group_size must be >= 1");
  const std::vector<Basket>& baskets = history.baskets();
  if (baskets.empty()) return {};

  const int t = static_cast<int>(baskets.size());
  const int n_groups = (t + group_size - 1) / group_size;
  // The oldest group absorbs the remainder, so the most recent groups are full.
  const int first_group_len = t - (n_groups - 1) * group_size;

  std::map<ItemId, double> acc;
  int basket_idx = 0;
  for (int g = 0; g < n_groups; ++g) {
    const int group_len = g == 0 ? first_group_len : group_size;
    const double group_weight =
        std::pow(group_decay, static_cast<double>(n_groups - 1 - g)) /
        static_cast<double>(group_len);
    for (int j = 0; j < group_len; ++j, ++basket_idx) {
      const double basket_weight =
          group_weight * std::pow(within_decay, static_cast<double>(group_len - 1 - j));
      for (ItemId item : baskets[static_cast<std::size_t>(basket_idx)].items) {
        acc[item] += basket_weight;
      }
    }
  }
  SparseVec pif;
  pif.reserve(acc.size());
  const double scale = 1.0 / static_cast<double>(n_groups);
  for (const auto& [item, value] : acc) pif.emplace_back(item, value * scale);
  return pif;
}

TifuknnModel TifuknnModel::fit(const DatasetBundle& bundle, const TifuknnParams& params,
                               int workers) {
  params.validate();
  TifuknnModel model;
  model.params_ = params;
  model.user_ids_.reserve(bundle.users.size());
  for (const UserSegments& seg : bundle.users) model.user_ids_.push_back(seg.user_id);

  const std::size_t n = bundle.users.size();
  model.pif_.resize(n);
  parallel_for(n, workers, [&](std::size_t u) {
    UserHistory history(bundle.users[u].user_id, fit_history_baskets(bundle.users[u]));
    model.pif_[u] = build_pif(history, params.group_size, params.within_decay,
                              params.group_decay);
  });

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(params.k_neighbors),
                                              n > 0 ? n - 1 : 0);
  if (k < static_cast<std::size_t>(params.k_neighbors)) {
    std::cerr << "tifuknn: only " << n - 1 << " candidate neighbors available, using all\n";
  }
  std::vector<double> norms(n);
  for (std::size_t u = 0; u < n; ++u) norms[u] = sparse_norm_sq(model.pif_[u]);

  model.neighbors_.resize(n);
  parallel_for(n, workers, [&](std::size_t u) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u) continue;
      const double d2 =
          norms[u] + norms[v] - 2.0 * sparse_dot(model.pif_[u], model.pif_[v]);
      dist.emplace_back(d2, v);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    model.neighbors_[u].resize(k);
    for (std::size_t i = 0; i < k; ++i) model.neighbors_[u][i] = dist[i].second;
  });
  return model;
}

std::size_t TifuknnModel::index_of(const std::string& user_id) const {
  const auto it = std::lower_bound(user_ids_.begin(), user_ids_.end(), user_id);
  if (it == user_ids_.end() || *it != user_id) {
    throw DataError("tifuknn: unknown user " + user_id);
  }
  return static_cast<std::size_t>(it - user_ids_.begin());
}

const SparseVec& TifuknnModel::pif(const std::string& user_id) const {
  return pif_[index_of(user_id)];
}

RankedPrediction TifuknnModel::predict(const std::string& user_id, int k) const {
  if (k < 1) throw ConfigError("basket size k must be >= 1");
  const std::size_t u = index_of(user_id);

  std::map<ItemId, double> score;
  for (const auto& [item, value] : pif_[u]) {
    score[item] += params_.fusion_alpha * value;
  }
  const auto& neigh = neighbors_[u];
  if (!neigh.empty()) {
    const double w = (1.0 - params_.fusion_alpha) / static_cast<double>(neigh.size());
    for (std::size_t v : neigh) {
      for (const auto& [item, value] : pif_[v]) score[item] += w * value;
    }
  }
  std::vector<std::pair<ItemId, double>> scored;
  scored.reserve(score.size());
  for (const auto& [item, value] : score) {
    if (value > 0.0) scored.emplace_back(item, value);
  }
  RankedPrediction pred;
  pred.user_id = user_id;
  pred.capacity = k;
  pred.items = top_k_items(std::move(scored), k);
  return pred;
}

// ------------------------------------------------------------- UP-CF@r

void UpcfParams::validate() const {
  if (recency_window < 1) throw ConfigError("upcf: recency_window must be >= 1");
  if (locality < 1) throw ConfigError("upcf: locality must be >= 1");
  if (asymmetry < 0.0 || asymmetry > 1.0) {
    throw ConfigError("upcf: asymmetry must be in [0, 1]");
  }
}

UpcfModel UpcfModel::fit(const DatasetBundle& bundle, const UpcfParams& params,
                         int workers) {
  params.validate();
  UpcfModel model;
  model.params_ = params;
  model.user_ids_.reserve(bundle.users.size());
  for (const UserSegments& seg : bundle.users) model.user_ids_.push_back(seg.user_id);

  const std::size_t n = bundle.users.size();
  model.item_sets_.resize(n);
  model.uwp_.resize(n);
  parallel_for(n, workers, [&](std::size_t u) {
    const std::vector<Basket> baskets = fit_history_baskets(bundle.users[u]);
    std::vector<ItemId> all;
    for (const Basket& b : baskets) all.insert(all.end(), b.items.begin(), b.items.end());
    model.item_sets_[u] = make_item_set(std::move(all));

    // User-wise popularity over the last r baskets, normalized by the number
    // of baskets the window actually covers.
    const std::size_t window =
        std::min<std::size_t>(static_cast<std::size_t>(params.recency_window),
                              baskets.size());
    std::map<ItemId, int> counts;
    for (std::size_t b = baskets.size() - window; b < baskets.size(); ++b) {
      for (ItemId item : baskets[b].items) ++counts[item];
    }
    SparseVec uwp;
    uwp.reserve(counts.size());
    for (const auto& [item, count] : counts) {
      uwp.emplace_back(item, static_cast<double>(count) / static_cast<double>(window));
    }
    model.uwp_[u] = std::move(uwp);
  });
  return model;
}

std::size_t UpcfModel::index_of(const std::string& user_id) const {
  const auto it = std::lower_bound(user_ids_.begin(), user_ids_.end(), user_id);
  if (it == user_ids_.end() || *it != user_id) {
    throw DataError("upcf: unknown user " + user_id);
  }
  return static_cast<std::size_t>(it - user_ids_.begin());
}

RankedPrediction UpcfModel::predict(const std::string& user_id, int k) const {
  if (k < 1) throw ConfigError("basket size k must be >= 1");
  const std::size_t u = index_of(user_id);
  const double size_u = static_cast<double>(item_sets_[u].size());

  std::map<ItemId, double> score;
  for (std::size_t v = 0; v < user_ids_.size(); ++v) {
    double sim;
    if (v == u) {
      sim = 1.0;
    } else {
      const std::size_t common = intersection_size(item_sets_[u], item_sets_[v]);
      if (common == 0) continue;
      const double size_v = static_cast<double>(item_sets_[v].size());
      sim = static_cast<double>(common) /
            (std::pow(size_u, params_.asymmetry) *
             std::pow(size_v, 1.0 - params_.asymmetry));
    }
    const double weight = std::pow(sim, static_cast<double>(params_.locality));
    for (const auto& [item, value] : uwp_[v]) score[item] += weight * value;
  }
  std::vector<std::pair<ItemId, double>> scored;
  scored.reserve(score.size());
  for (const auto& [item, value] : score) {
    if (value > 0.0) scored.emplace_back(item, value);
  }
  RankedPrediction pred;
  pred.user_id = user_id;
  pred.capacity = k;
  pred.items = top_k_items(std::move(scored), k);
  return pred;
}

// ------------------------------------------------------------- orchestration

BaselineMethod parse_baseline_name(const std::string& name) {
  if (name == "g-topfreq") return BaselineMethod::g_topfreq;
  if (name == "p-topfreq") return BaselineMethod::p_topfreq;
  if (name == "gp-topfreq") return BaselineMethod::gp_topfreq;
  if (name == "tifuknn") return BaselineMethod::tifuknn;
  if (name == "upcf" || name == "up-cf" || name == "up-cf@r") return BaselineMethod::upcf;
  throw ConfigError("unknown method '" + name +
                    "' (expected g-topfreq, p-topfreq, gp-topfreq, tifuknn, or upcf)");
}

const char* baseline_name(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::g_topfreq: return "g-topfreq";
    case BaselineMethod::p_topfreq: return "p-topfreq";
    case BaselineMethod::gp_topfreq: return "gp-topfreq";
    case BaselineMethod::tifuknn: return "tifuknn";
    case BaselineMethod::upcf: return "upcf";
  }
  return "unknown";
}

namespace {

// User-level models produce one basket per user; compute it once and stamp it
// onto every instance of that user.
template <typename PredictFn, typename StampFn>
void per_user_predictions(const EvalCohort& cohort, int workers, PredictFn predict,
                          StampFn stamp) {
  std::vector<std::string> users;
  users.reserve(cohort.instances.size());
  for (const EvalInstance& inst : cohort.instances) {
    users.push_back(inst.history.user_id());
  }
  std::vector<std::string> unique_users = users;
  std::sort(unique_users.begin(), unique_users.end());
  unique_users.erase(std::unique(unique_users.begin(), unique_users.end()),
                     unique_users.end());

  std::vector<RankedPrediction> by_user(unique_users.size());
  parallel_for(unique_users.size(), workers,
               [&](std::size_t u) { by_user[u] = predict(unique_users[u]); });

  parallel_for(cohort.instances.size(), workers, [&](std::size_t i) {
    const auto it = std::lower_bound(unique_users.begin(), unique_users.end(), users[i]);
    stamp(i, by_user[static_cast<std::size_t>(it - unique_users.begin())]);
  });
}

}  // namespace

std::vector<RankedPrediction> predict_cohort(BaselineMethod method,
                                             const DatasetBundle& bundle,
                                             const EvalCohort& cohort, int k,
                                             const BaselineParams& params, int workers) {
  if (k < 1) throw ConfigError("basket size k must be >= 1");
  if (k > static_cast<int>(bundle.vocab.size())) {
    std::cerr << "warning: k=" << k << " exceeds vocabulary size " << bundle.vocab.size()
              << ", predictions will be truncated\n";
  }
  const std::size_t n = cohort.instances.size();
  std::vector<RankedPrediction> preds(n);

  auto stamp = [&](std::size_t i, RankedPrediction pred) {
    pred.user_id = cohort.instances[i].history.user_id();
    pred.target_index = cohort.instances[i].target_index;
    preds[i] = std::move(pred);
  };

  switch (method) {
    case BaselineMethod::g_topfreq: {
      const GlobalFreqModel model = GlobalFreqModel::fit(bundle);
      const RankedPrediction base = g_topfreq(model, k);
      parallel_for(n, workers, [&](std::size_t i) { stamp(i, base); });
      break;
    }
    case BaselineMethod::p_topfreq: {
      parallel_for(n, workers, [&](std::size_t i) {
        const auto table = PersonalFreqTable::from_history(cohort.instances[i].history);
        stamp(i, p_topfreq(table, k));
      });
      break;
    }
    case BaselineMethod::gp_topfreq: {
      const GlobalFreqModel model = GlobalFreqModel::fit(bundle);
      parallel_for(n, workers, [&](std::size_t i) {
        const auto table = PersonalFreqTable::from_history(cohort.instances[i].history);
        stamp(i, gp_topfreq(table, model, k));
      });
      break;
    }
    case BaselineMethod::tifuknn: {
      const TifuknnModel model = TifuknnModel::fit(bundle, params.tifuknn, workers);
      per_user_predictions(
          cohort, workers,
          [&](const std::string& user) { return model.predict(user, k); }, stamp);
      break;
    }
    case BaselineMethod::upcf: {
      const UpcfModel model = UpcfModel::fit(bundle, params.upcf, workers);
      per_user_predictions(
          cohort, workers,
          [&](const std::string& user) { return model.predict(user, k); }, stamp);
      break;
    }
  }
  return preds;
}

}  // namespace nbr
