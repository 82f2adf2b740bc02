#include "nbr/core.hpp"

#include <algorithm>
#include <iterator>

#include "nbr/errors.hpp"

namespace nbr {

ItemSet make_item_set(std::vector<ItemId> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

bool item_set_contains(const ItemSet& set, ItemId item) {
  return std::binary_search(set.begin(), set.end(), item);
}

ItemSet item_set_union(const ItemSet& a, const ItemSet& b) {
  ItemSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ItemSet item_set_intersection(const ItemSet& a, const ItemSet& b) {
  ItemSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ItemSet item_set_difference(const ItemSet& a, const ItemSet& b) {
  ItemSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t intersection_size(const ItemSet& a, const ItemSet& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::pair<ItemSet, ItemSet> partition_basket(const ItemSet& items,
                                             const ItemSet& history_repeat_set) {
  return {item_set_intersection(items, history_repeat_set),
          item_set_difference(items, history_repeat_set)};
}

UserHistory::UserHistory(std::string user_id, std::vector<Basket> baskets)
    : user_id_(std::move(user_id)), baskets_(std::move(baskets)) {
  std::stable_sort(baskets_.begin(), baskets_.end(),
                   [](const Basket& a, const Basket& b) { return a.ts < b.ts; });
  std::vector<ItemId> all;
  for (const Basket& basket : baskets_) {
    all.insert(all.end(), basket.items.begin(), basket.items.end());
  }
  repeat_set_ = make_item_set(std::move(all));
}

GroundTruth GroundTruth::from_target(const ItemSet& target, const ItemSet& history_repeat_set) {
  auto [rep, expl] = partition_basket(target, history_repeat_set);
  return GroundTruth{target, std::move(rep), std::move(expl)};
}

RankedPrediction truncate_prediction(const RankedPrediction& pred, int k) {
  if (k < 1 || k > pred.capacity) {
    throw ConfigError("cannot truncate prediction of capacity " +
                      std::to_string(pred.capacity) + " to k=" + std::to_string(k));
  }
  RankedPrediction out;
  out.user_id = pred.user_id;
  out.target_index = pred.target_index;
  out.capacity = k;
  const std::size_t len = std::min<std::size_t>(pred.items.size(), static_cast<std::size_t>(k));
  out.items.assign(pred.items.begin(), pred.items.begin() + len);
  if (!pred.scores.empty()) {
    out.scores.assign(pred.scores.begin(), pred.scores.begin() + len);
  }
  return out;
}

std::size_t EvalCohort::n_repeat() const {
  std::size_t count = 0;
  for (const EvalInstance& inst : instances) {
    if (!inst.truth.repeat_part.empty()) ++count;
  }
  return count;
}

std::size_t EvalCohort::n_explore() const {
  std::size_t count = 0;
  for (const EvalInstance& inst : instances) {
    if (!inst.truth.explore_part.empty()) ++count;
  }
  return count;
}

}  // namespace nbr
