#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nbr/core.hpp"

namespace nbr {

// One source row after schema normalization.
struct RawTransaction {
  std::string user_key;
  std::string basket_key;  // transaction/order id, or calendar day for day-bucketed sources
  std::int64_t time_key = 0;
  std::string item_key;
};

enum class SourceSchema { tafeng, dunnhumby, instacart, canonical };

// Throws ConfigError on an unknown schema name.
SourceSchema parse_schema_name(const std::string& name);
const char* schema_name(SourceSchema schema);

struct ParseOptions {
  // Keep only rows within max_days of the earliest time_key (day-granularity
  // sources; used to take a leading slice of a long transaction log).
  std::optional<std::int64_t> max_days;
};

struct ParseResult {
  std::vector<RawTransaction> rows;
  std::uint64_t dropped_rows = 0;  // rows missing user/item fields or otherwise malformed
};

ParseResult parse_source(const std::string& path, SourceSchema schema,
                         const ParseOptions& opts = {});

struct PreprocessConfig {
  int min_baskets_per_user = 3;
  int max_baskets_per_user = 50;
  double interaction_coverage = 0.95;
  std::array<double, 3> split_fractions{0.72, 0.08, 0.20};  // train, val, test
  // Alternative reading of the user sampling rule: bound the user's average
  // basket size instead of their basket count (same [min, max] bounds).
  bool filter_by_basket_size = false;

  void validate() const;  // ConfigError on bad ranges
};

// Pre-vocabulary basket: item source keys, deduplicated and sorted.
struct RawBasket {
  std::string basket_key;
  std::int64_t time_key = 0;
  std::vector<std::string> item_keys;

  bool operator==(const RawBasket&) const = default;
};

// user key -> chronologically ordered baskets (ties by basket key).
using RawUserMap = std::map<std::string, std::vector<RawBasket>>;

RawUserMap build_baskets(const std::vector<RawTransaction>& rows);

// Applies the user bound, then rare-item removal at the configured interaction
// coverage, deletes emptied baskets, and re-applies the user bound once.
// Throws DataError if nothing survives.
RawUserMap filter_dataset(const RawUserMap& users, const PreprocessConfig& cfg);

class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary from_keys(std::vector<std::string> keys);  // id = position

  std::size_t size() const { return keys_.size(); }
  const std::string& key(ItemId id) const;
  std::optional<ItemId> id(const std::string& key) const;
  const std::vector<std::string>& keys() const { return keys_; }

  // Digest of the full id -> key table; identifies the dataset build.
  std::string sha256() const;

  bool operator==(const Vocabulary& other) const { return keys_ == other.keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, ItemId> ids_;
};

struct UserSegments {
  std::string user_id;
  std::vector<Basket> train;
  std::vector<Basket> val;
  std::vector<Basket> test;

  std::vector<Basket> all() const;

  bool operator==(const UserSegments&) const = default;
};

struct DatasetStats {
  std::size_t n_items = 0;
  std::size_t n_users = 0;
  double avg_basket_size = 0.0;
  double avg_baskets_per_user = 0.0;
  double repeat_ratio = 0.0;   // mean |T^rep| / |T| over test instances
  double explore_ratio = 0.0;  // 1 - repeat_ratio

  bool operator==(const DatasetStats&) const = default;
};

struct DatasetBundle {
  std::string name;
  Vocabulary vocab;
  std::vector<UserSegments> users;  // sorted by user_id
  DatasetStats stats;

  const UserSegments* find_user(const std::string& user_id) const;

  bool operator==(const DatasetBundle&) const = default;
};

// Per-user chronological 72/8/20-style allocation. n_test and n_val round
// down but get at least one basket each; a user whose train segment would
// be empty is dropped (counted in dropped_users).
struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};
SplitCounts split_counts(int n_baskets, const std::array<double, 3>& fractions);

struct SplitOutcome {
  DatasetBundle bundle;
  std::uint64_t dropped_users = 0;
};
SplitOutcome split_per_user(const RawUserMap& users, const PreprocessConfig& cfg,
                            const std::string& dataset_name);

DatasetStats compute_stats(const DatasetBundle& bundle);

// Renders the stats block as an aligned table.
std::string stats_table(const DatasetStats& stats, const std::string& name);

enum class TargetMode { rolling, first_test_basket };

struct CohortOptions {
  TargetMode target = TargetMode::rolling;
  // Whether validation baskets are part of the history (and hence of E^rep)
  // when test baskets are the targets.
  bool include_validation_history = true;
};

// One EvalInstance per test basket (rolling: history = everything before the
// target), or one per user when target = first_test_basket.
EvalCohort build_eval_cohort(const DatasetBundle& bundle, const CohortOptions& opts = {});

// Targets are the validation baskets; history is the train segment plus
// earlier validation baskets. Used for hyperparameter selection.
EvalCohort build_validation_cohort(const DatasetBundle& bundle);

// Canonical on-disk form: baskets.jsonl / vocabulary.jsonl / splits.jsonl
// (+ stats.json for humans). load(write(b)) == b field-for-field.
void write_canonical(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_canonical(const std::string& dir);

}  // namespace nbr
