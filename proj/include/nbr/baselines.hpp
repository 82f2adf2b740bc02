#pragma once

#include <string>
#include <vector>

#include "nbr/core.hpp"
#include "nbr/dataset.hpp"

namespace nbr {

// ------------------------------------------------------------- frequency

struct GlobalFreqModel {
  // Every vocabulary item exactly once: frequency over the train+val baskets
  // descending, ties by ascending item id.
  std::vector<ItemId> ranked_items;

  static GlobalFreqModel fit(const DatasetBundle& bundle);
};

// Identical basket for every user: the k most popular items.
RankedPrediction g_topfreq(const GlobalFreqModel& model, int k);

struct PersonalFreqTable {
  // (item, basket count) over the history, sorted by item id.
  std::vector<std::pair<ItemId, int>> counts;

  static PersonalFreqTable from_history(const UserHistory& history);
};

// Top-k personal items; may be shorter than k (empty slots) when the user
// has interacted with fewer than k distinct items.
RankedPrediction p_topfreq(const PersonalFreqTable& table, int k);

// P-TopFreq first, then global popular items fill the remaining slots.
RankedPrediction gp_topfreq(const PersonalFreqTable& table, const GlobalFreqModel& model,
                            int k);

// ------------------------------------------------------------- neighbors

struct TifuknnParams {
  int k_neighbors = 300;
  int group_size = 7;        // m: baskets per temporal group
  double within_decay = 0.9; // r_b
  double group_decay = 0.7;  // r_g
  double fusion_alpha = 0.7; // weight of the user's own vector vs the neighbor mean

  void validate() const;
};

struct UpcfParams {
  int recency_window = 5; // r: number of most recent baskets feeding user-wise popularity
  int locality = 5;       // q: similarity exponent
  double asymmetry = 0.5; // α of the asymmetric cosine

  void validate() const;
};

// Sparse non-negative vector over the vocabulary, sorted by item id.
using SparseVec = std::vector<std::pair<ItemId, double>>;

// Time-decayed personal item frequencies: baskets fall into ceil(t/m)
// consecutive groups (the oldest group may be smaller); basket weights decay
// by within_decay inside a group, group weights by group_decay, and the sum
// is normalized by group size and group count.
SparseVec build_pif(const UserHistory& history, int group_size, double within_decay,
                    double group_decay);

class TifuknnModel {
 public:
  static TifuknnModel fit(const DatasetBundle& bundle, const TifuknnParams& params,
                          int workers = 1);

  // α-blend of the user's PIF with the mean PIF of the k nearest users
  // (Euclidean distance); items ranked by score descending, ties ascending.
  RankedPrediction predict(const std::string& user_id, int k) const;

  const SparseVec& pif(const std::string& user_id) const;

 private:
  TifuknnParams params_;
  std::vector<std::string> user_ids_;                // sorted
  std::vector<SparseVec> pif_;
  std::vector<std::vector<std::size_t>> neighbors_;  // per user, nearest first

  std::size_t index_of(const std::string& user_id) const;
};

class UpcfModel {
 public:
  static UpcfModel fit(const DatasetBundle& bundle, const UpcfParams& params,
                       int workers = 1);

  // score(u, i) = Σ_v sim(u,v)^q · UWP(v, i); sim is the asymmetric cosine on
  // binary train+val item sets, v ranges over all users (sim(u,u) = 1).
  RankedPrediction predict(const std::string& user_id, int k) const;

 private:
  UpcfParams params_;
  std::vector<std::string> user_ids_;  // sorted
  std::vector<ItemSet> item_sets_;     // I_u over train+val
  std::vector<SparseVec> uwp_;         // recency-windowed relative frequencies

  std::size_t index_of(const std::string& user_id) const;
};

// ------------------------------------------------------------- orchestration

enum class BaselineMethod { g_topfreq, p_topfreq, gp_topfreq, tifuknn, upcf };

BaselineMethod parse_baseline_name(const std::string& name);  // ConfigError on unknown
const char* baseline_name(BaselineMethod method);

struct BaselineParams {
  TifuknnParams tifuknn;
  UpcfParams upcf;
};

// One prediction per cohort instance, in cohort order, stamped with the
// instance's user id and target index. Frequency baselines use the instance
// history; neighbor models are fit once on train+val.
std::vector<RankedPrediction> predict_cohort(BaselineMethod method,
                                             const DatasetBundle& bundle,
                                             const EvalCohort& cohort, int k,
                                             const BaselineParams& params = {},
                                             int workers = 1);

}  // namespace nbr
