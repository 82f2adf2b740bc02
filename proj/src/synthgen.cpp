#include "nbr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "nbr/detail/io_util.hpp"
#include "nbr/detail/parallel.hpp"
#include "nbr/errors.hpp"

using nlohmann::json;

namespace nbr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Draw helpers avoid std distributions, whose outputs are not pinned by the
// standard; this keeps fixtures reproducible across toolchains.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t next_below(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

struct PopularityTable {
  std::vector<double> cdf;

  static PopularityTable build(int n_items, double exponent) {
    PopularityTable t;
    t.cdf.resize(static_cast<std::size_t>(n_items));
    double cum = 0.0;
    for (int i = 0; i < n_items; ++i) {
      cum += std::pow(static_cast<double>(i + 1), -exponent);
      t.cdf[static_cast<std::size_t>(i)] = cum;
    }
    return t;
  }

  ItemId draw(std::mt19937_64& rng) const {
    const double u = next_unit(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    return static_cast<ItemId>(idx);
  }
};

std::vector<Basket> generate_user_baskets(const SynthConfig& cfg,
                                          const PopularityTable& pop,
                                          std::uint64_t user_index) {
  std::mt19937_64 rng(splitmix64(cfg.seed + 0x9e3779b97f4a7c15ULL * (user_index + 1)));
  const int n_baskets =
      cfg.min_baskets +
      static_cast<int>(next_below(rng, static_cast<std::uint64_t>(cfg.max_baskets -
                                                                   cfg.min_baskets + 1)));
  std::vector<Basket> baskets;
  baskets.reserve(static_cast<std::size_t>(n_baskets));
  ItemSet repeat_set;
  for (int t = 0; t < n_baskets; ++t) {
    const int size =
        cfg.min_basket_size +
        static_cast<int>(next_below(rng, static_cast<std::uint64_t>(cfg.max_basket_size -
                                                                     cfg.min_basket_size + 1)));
    ItemSet basket_items;
    for (int slot = 0; slot < size; ++slot) {
      const bool want_repeat = next_unit(rng) < cfg.repeat_prob && !repeat_set.empty();
      if (want_repeat) {
        // Repeat draw: uniform over past items not already in this basket.
        const ItemSet candidates = item_set_difference(repeat_set, basket_items);
        if (candidates.empty()) continue;  // no popularity fallback: keeps ρ=1 all-repeat
        const ItemId pick =
            candidates[next_below(rng, static_cast<std::uint64_t>(candidates.size()))];
        basket_items = item_set_union(basket_items, {pick});
      } else {
        for (int attempt = 0; attempt < 64; ++attempt) {
          const ItemId pick = pop.draw(rng);
          if (!item_set_contains(basket_items, pick)) {
            basket_items = item_set_union(basket_items, {pick});
            break;
          }
        }
      }
    }
    if (basket_items.empty()) continue;
    repeat_set = item_set_union(repeat_set, basket_items);
    baskets.push_back({t, std::move(basket_items)});
  }
  return baskets;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1 || n_items < 1) {
    throw ConfigError("synth: n_users and n_items must be >= 1");
  }
  if (min_baskets < 3 || max_baskets < min_baskets) {
    throw ConfigError("synth: basket count range must satisfy 3 <= min <= max");
  }
  if (min_basket_size < 1 || max_basket_size < min_basket_size) {
    throw ConfigError("synth: basket size range must satisfy 1 <= min <= max");
  }
  if (repeat_prob < 0.0 || repeat_prob > 1.0) {
    throw ConfigError("synth: repeat_prob must be in [0, 1]");
  }
  if (popularity_exponent < 0.0) {
    throw ConfigError("synth: popularity_exponent must be >= 0");
  }
  const double sum = split_fractions[0] + split_fractions[1] + split_fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("synth: split fractions must sum to 1.0");
  }
}

SynthConfig SynthConfig::from_json_file(const std::string& path) {
  const json j = ioutil::parse_json_line(ioutil::read_text_file(path), "synth config");
  SynthConfig cfg;
  try {
    cfg.n_users = j.value("n_users", cfg.n_users);
    cfg.n_items = j.value("n_items", cfg.n_items);
    cfg.min_baskets = j.value("min_baskets", cfg.min_baskets);
    cfg.max_baskets = j.value("max_baskets", cfg.max_baskets);
    cfg.min_basket_size = j.value("min_basket_size", cfg.min_basket_size);
    cfg.max_basket_size = j.value("max_basket_size", cfg.max_basket_size);
    cfg.repeat_prob = j.value("repeat_prob", cfg.repeat_prob);
    cfg.popularity_exponent = j.value("popularity_exponent", cfg.popularity_exponent);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.name = j.value("name", cfg.name);
    if (j.contains("split_fractions")) {
      const auto& f = j.at("split_fractions");
      cfg.split_fractions = {f.at(0).get<double>(), f.at(1).get<double>(),
                             f.at(2).get<double>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synth config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json SynthConfig::to_json() const {
  return json{{"n_users", n_users},
              {"n_items", n_items},
              {"min_baskets", min_baskets},
              {"max_baskets", max_baskets},
              {"min_basket_size", min_basket_size},
              {"max_basket_size", max_basket_size},
              {"repeat_prob", repeat_prob},
              {"popularity_exponent", popularity_exponent},
              {"seed", seed},
              {"split_fractions", split_fractions},
              {"name", name}};
}

DatasetBundle generate(const SynthConfig& cfg, int workers) {
  cfg.validate();
  const PopularityTable pop = PopularityTable::build(cfg.n_items, cfg.popularity_exponent);

  std::vector<std::vector<Basket>> per_user(static_cast<std::size_t>(cfg.n_users));
  parallel_for(per_user.size(), workers, [&](std::size_t u) {
    per_user[u] = generate_user_baskets(cfg, pop, u);
  });

  DatasetBundle bundle;
  bundle.name = cfg.name;
  std::vector<std::string> keys;
  keys.reserve(static_cast<std::size_t>(cfg.n_items));
  for (int i = 0; i < cfg.n_items; ++i) keys.push_back(std::to_string(i));
  bundle.vocab = Vocabulary::from_keys(std::move(keys));

  for (std::size_t u = 0; u < per_user.size(); ++u) {
    const std::vector<Basket>& baskets = per_user[u];
    const SplitCounts counts =
        split_counts(static_cast<int>(baskets.size()), cfg.split_fractions);
    if (counts.train < 1) continue;
    char id[16];
    std::snprintf(id, sizeof(id), "u%06zu", u);
    UserSegments seg;
    seg.user_id = id;
    seg.train.assign(baskets.begin(), baskets.begin() + counts.train);
    seg.val.assign(baskets.begin() + counts.train,
                   baskets.begin() + counts.train + counts.val);
    seg.test.assign(baskets.begin() + counts.train + counts.val, baskets.end());
    bundle.users.push_back(std::move(seg));
  }
  if (bundle.users.empty()) {
    throw DataError("synthetic generation produced no usable users");
  }
  bundle.stats = compute_stats(bundle);
  return bundle;
}

}  // namespace nbr
