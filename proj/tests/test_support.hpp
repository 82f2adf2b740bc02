#pragma once

#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "nbr/dataset.hpp"

namespace nbr::testsupport {

inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("nbr_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Bundle straight from per-user (train, val, test) item lists; ts = position.
inline DatasetBundle toy_bundle(
    int n_items,
    const std::vector<std::tuple<std::string, std::vector<ItemSet>, std::vector<ItemSet>,
                                 std::vector<ItemSet>>>& users) {
  DatasetBundle bundle;
  bundle.name = "toy";
  std::vector<std::string> keys;
  for (int i = 0; i < n_items; ++i) keys.push_back(std::to_string(i));
  bundle.vocab = Vocabulary::from_keys(std::move(keys));
  for (const auto& [user, train, val, test] : users) {
    UserSegments seg;
    seg.user_id = user;
    std::int64_t ts = 0;
    for (const ItemSet& items : train) seg.train.push_back({ts++, items});
    for (const ItemSet& items : val) seg.val.push_back({ts++, items});
    for (const ItemSet& items : test) seg.test.push_back({ts++, items});
    bundle.users.push_back(std::move(seg));
  }
  std::sort(bundle.users.begin(), bundle.users.end(),
            [](const UserSegments& a, const UserSegments& b) {
              return a.user_id < b.user_id;
            });
  return bundle;
}

}  // namespace nbr::testsupport
