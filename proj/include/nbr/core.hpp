#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nbr {

// Dense index into a dataset-local vocabulary.
using ItemId = std::int32_t;

// Canonical set representation: sorted, duplicate-free.
using ItemSet = std::vector<ItemId>;

ItemSet make_item_set(std::vector<ItemId> items);
bool item_set_contains(const ItemSet& set, ItemId item);
ItemSet item_set_union(const ItemSet& a, const ItemSet& b);
ItemSet item_set_intersection(const ItemSet& a, const ItemSet& b);
ItemSet item_set_difference(const ItemSet& a, const ItemSet& b);
std::size_t intersection_size(const ItemSet& a, const ItemSet& b);

// One transaction: unordered item set plus an ordering timestamp
// (epoch seconds, or an ordinal day/order index when the source has no time).
struct Basket {
  std::int64_t ts = 0;
  ItemSet items;

  bool operator==(const Basket&) const = default;
};

// Splits `items` into (items ∩ history_repeat_set, items \ history_repeat_set).
std::pair<ItemSet, ItemSet> partition_basket(const ItemSet& items,
                                             const ItemSet& history_repeat_set);

// A user's chronological basket sequence and the union of everything in it.
// Immutable once built; safe to share across workers.
class UserHistory {
 public:
  UserHistory() = default;
  // Stable-sorts baskets by ts (ties keep the given order) and derives the repeat set.
  UserHistory(std::string user_id, std::vector<Basket> baskets);

  const std::string& user_id() const { return user_id_; }
  const std::vector<Basket>& baskets() const { return baskets_; }
  const ItemSet& repeat_set() const { return repeat_set_; }

  bool operator==(const UserHistory&) const = default;

 private:
  std::string user_id_;
  std::vector<Basket> baskets_;
  ItemSet repeat_set_;
};

// Held-out next basket with its repeat/explore partition.
struct GroundTruth {
  ItemSet target;
  ItemSet repeat_part;   // target ∩ E^rep
  ItemSet explore_part;  // target \ E^rep

  static GroundTruth from_target(const ItemSet& target, const ItemSet& history_repeat_set);

  bool operator==(const GroundTruth&) const = default;
};

// Ordered top-k item list for one evaluation target. items.size() may be
// smaller than capacity; the missing tail encodes empty slots.
struct RankedPrediction {
  std::string user_id;
  int target_index = 0;        // index of the target basket within the user's test segment
  int capacity = 0;            // K
  std::vector<ItemId> items;   // distinct, rank order
  std::vector<double> scores;  // optional; parallel to items, non-increasing

  bool operator==(const RankedPrediction&) const = default;
};

// Prefix of `pred` re-declared at capacity k (k must not exceed pred.capacity).
RankedPrediction truncate_prediction(const RankedPrediction& pred, int k);

// One prediction target: everything strictly before the target, plus the truth.
struct EvalInstance {
  UserHistory history;
  GroundTruth truth;
  int target_index = 0;
};

struct EvalCohort {
  std::vector<EvalInstance> instances;

  std::size_t n() const { return instances.size(); }
  std::size_t n_repeat() const;   // instances whose truth has repeat items
  std::size_t n_explore() const;  // instances whose truth has explore items
};

}  // namespace nbr
