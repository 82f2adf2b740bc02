#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "nbr/dataset.hpp"

namespace nbr {

// Controls for the synthetic basket-sequence generator: a configurable blend
// of repeat draws (uniform over the user's own past items) and popularity
// draws (power law over the vocabulary).
struct SynthConfig {
  int n_users = 1000;
  int n_items = 500;
  int min_baskets = 4;
  int max_baskets = 12;
  int min_basket_size = 3;
  int max_basket_size = 8;
  double repeat_prob = 0.5;         // per-slot probability of drawing a repeat item
  double popularity_exponent = 1.0; // power-law skew over items; 0 = uniform
  std::uint64_t seed = 42;
  std::array<double, 3> split_fractions{0.72, 0.08, 0.20};
  std::string name = "synthetic";

  void validate() const;  // ConfigError
  static SynthConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
};

// Deterministic given the seed: every user draws from an independent,
// seed-derived PRNG stream, so parallel generation equals serial generation.
DatasetBundle generate(const SynthConfig& cfg, int workers = 1);

}  // namespace nbr
