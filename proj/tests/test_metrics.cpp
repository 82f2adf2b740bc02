#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "nbr/errors.hpp"
#include "nbr/metrics.hpp"

using namespace nbr;

namespace {

RankedPrediction make_pred(std::vector<ItemId> items, int k, std::string user = "u",
                           int target = 0) {
  RankedPrediction p;
  p.user_id = std::move(user);
  p.target_index = target;
  p.capacity = k;
  p.items = std::move(items);
  return p;
}

// Independent scorers on std::set, element-by-element.
struct Oracle {
  static std::size_t hits(const std::vector<ItemId>& items, int k, const ItemSet& truth) {
    const std::set<ItemId> t(truth.begin(), truth.end());
    std::size_t h = 0;
    for (std::size_t i = 0; i < items.size() && i < static_cast<std::size_t>(k); ++i) {
      if (t.count(items[i])) ++h;
    }
    return h;
  }
  static double recall(const RankedPrediction& p, const ItemSet& truth) {
    return static_cast<double>(hits(p.items, p.capacity, truth)) /
           static_cast<double>(truth.size());
  }
  static double ndcg(const RankedPrediction& p, const ItemSet& truth) {
    const std::set<ItemId> t(truth.begin(), truth.end());
    double dcg = 0;
    for (std::size_t i = 0; i < p.items.size() && i < static_cast<std::size_t>(p.capacity);
         ++i) {
      if (t.count(p.items[i])) dcg += std::log(2.0) / std::log(static_cast<double>(i + 2));
    }
    double idcg = 0;
    const std::size_t ideal = std::min<std::size_t>(t.size(), p.capacity);
    for (std::size_t i = 0; i < ideal; ++i) {
      idcg += std::log(2.0) / std::log(static_cast<double>(i + 2));
    }
    return dcg / idcg;
  }
};

EvalInstance make_instance(std::vector<Basket> history_baskets, ItemSet target,
                           std::string user = "u", int target_index = 0) {
  EvalInstance inst;
  inst.history = UserHistory(std::move(user), std::move(history_baskets));
  inst.truth = GroundTruth::from_target(target, inst.history.repeat_set());
  inst.target_index = target_index;
  return inst;
}

}  // namespace

TEST_CASE("recall counts the intersection over the truth size") {
  CHECK(recall_at_k(make_pred({1, 2, 3}, 3), {2, 3, 4}) == doctest::Approx(2.0 / 3.0));
  CHECK(recall_at_k(make_pred({2, 3, 4}, 5), {2, 3, 4}) == 1.0);
  CHECK(recall_at_k(make_pred({1, 2}, 2), {3, 4}) == 0.0);
  CHECK_THROWS_AS(recall_at_k(make_pred({1}, 1), {}), DataError);
}

TEST_CASE("ndcg with a single relevant item at rank 2") {
  const double expected = 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k(make_pred({5, 2}, 2), {2}) == doctest::Approx(expected));
  CHECK(ndcg_at_k(make_pred({2, 5}, 2), {2}) == 1.0);
  CHECK(ndcg_at_k(make_pred({5, 6}, 2), {2}) == 0.0);
}

TEST_CASE("ndcg ideal is truncated at min(|T|, K)") {
  // |T| = 3 but K = 2: a perfect prefix scores 1.
  CHECK(ndcg_at_k(make_pred({1, 2}, 2), {1, 2, 3}) == 1.0);
}

TEST_CASE("phr is the share of predictions with at least one hit") {
  std::vector<RankedPrediction> preds{make_pred({1}, 1), make_pred({9}, 1)};
  std::vector<ItemSet> truths{{1, 5}, {2}};
  CHECK(phr(preds, truths) == 0.5);
  truths = {{1}, {4, 9}};
  CHECK(phr(preds, truths) == 1.0);
  truths = {{7}, {8}};
  CHECK(phr(preds, truths) == 0.0);
  CHECK_THROWS_AS(phr({}, {}), DataError);
}

TEST_CASE("rep_expl_ratio divides by capacity, empty slots count toward neither") {
  auto [r1, e1] = rep_expl_ratio(make_pred({1, 3, 2, 4}, 4), {1, 2});
  CHECK(r1 == 0.5);
  CHECK(e1 == 0.5);
  auto [r2, e2] = rep_expl_ratio(make_pred({1, 2}, 4), {1, 2});
  CHECK(r2 == 0.5);
  CHECK(e2 == 0.0);
  CHECK(r2 + e2 < 1.0);
  auto [r3, e3] = rep_expl_ratio(make_pred({8, 9}, 4), {1, 2});
  CHECK(r3 == 0.0);
  CHECK(e3 == 0.5);
}

TEST_CASE("recall_rep and recall_expl use the whole prediction against each part") {
  // History {1,2,3}; truth {1,2,5}: T_rep = {1,2}, T_expl = {5}.
  const EvalInstance inst = make_instance({{0, {1, 2, 3}}}, {1, 2, 5});
  const RankedPrediction pred = make_pred({1, 4}, 2);
  CHECK(*recall_rep(pred, inst.truth) == 0.5);
  CHECK(*recall_expl(pred, inst.truth) == 0.0);

  // All-repeat truth: explore metrics are not applicable, never zero.
  const EvalInstance all_rep = make_instance({{0, {1, 2}}}, {1, 2});
  CHECK(!recall_expl(make_pred({1}, 1), all_rep.truth).has_value());
  CHECK(!hit_expl(make_pred({1}, 1), all_rep.truth).has_value());

  // P covers T: both defined metrics are 1.
  const RankedPrediction full = make_pred({1, 2, 5}, 3);
  CHECK(*recall_rep(full, inst.truth) == 1.0);
  CHECK(*recall_expl(full, inst.truth) == 1.0);
}

TEST_CASE("aggregate averages each metric over its own population") {
  const EvalInstance a = make_instance({{0, {1, 2}}}, {1, 3}, "a");   // mixed truth
  const EvalInstance b = make_instance({{0, {5, 6}}}, {5, 6}, "b");   // all repeat
  std::vector<PerUserMetrics> per_user{
      score_instance(make_pred({1, 9}, 2, "a"), a),   // recall 1/2
      score_instance(make_pred({5, 7}, 2, "b"), b),   // recall 1/2... adjust below
  };
  per_user[0].recall = 0.2;
  per_user[1].recall = 0.6;
  const MetricsReport report = aggregate(per_user, "m", "d", 2);
  CHECK(report.recall == doctest::Approx(0.4));
  CHECK(report.n == 2);
  CHECK(report.n_r == 2);
  CHECK(report.n_e == 1);  // instance b has no explore part
  // The explore mean comes from instance a alone.
  CHECK(report.recall_expl.has_value());
  CHECK(*report.recall_expl == 0.0);
  CHECK_THROWS_AS(aggregate({}, "m", "d", 2), DataError);
}

TEST_CASE("aggregate of a single user equals that user's metrics") {
  const EvalInstance inst = make_instance({{0, {1, 2, 3}}}, {1, 5});
  const PerUserMetrics m = score_instance(make_pred({1, 5}, 2), inst);
  const MetricsReport report = aggregate({m}, "m", "d", 2);
  CHECK(report.recall == m.recall);
  CHECK(report.ndcg == m.ndcg);
  CHECK(report.phr == (m.hit ? 1.0 : 0.0));
  CHECK(*report.recall_rep == *m.recall_rep);
  CHECK(*report.recall_expl == *m.recall_expl);
}

TEST_CASE("metric identities hold on random instances") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> k_dist(1, 12);
  std::uniform_int_distribution<ItemId> item(0, 29);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = k_dist(rng);
    // Random history, truth, and a duplicate-free prediction.
    std::vector<Basket> history;
    const int n_baskets = 1 + static_cast<int>(rng() % 4);
    for (int t = 0; t < n_baskets; ++t) {
      ItemSet items;
      for (int i = 0; i < 4; ++i) items.push_back(item(rng));
      history.push_back({t, make_item_set(std::move(items))});
    }
    ItemSet target;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 6); ++i) target.push_back(item(rng));
    target = make_item_set(std::move(target));
    const EvalInstance inst = make_instance(history, target);

    std::vector<ItemId> items;
    while (static_cast<int>(items.size()) < k && rng() % 8 != 0) {
      const ItemId e = item(rng);
      if (std::find(items.begin(), items.end(), e) == items.end()) items.push_back(e);
    }
    const RankedPrediction pred = make_pred(items, k);
    const PerUserMetrics m = score_instance(pred, inst);

    // Precision@K = Recall@K * |T| / K, exactly (shared integer hit count).
    const std::size_t h = Oracle::hits(pred.items, k, inst.truth.target);
    CHECK(m.precision == static_cast<double>(h) / k);
    CHECK(m.recall == static_cast<double>(h) / static_cast<double>(target.size()));

    // Hits split exactly across the truth partition.
    const std::size_t h_rep = Oracle::hits(pred.items, k, inst.truth.repeat_part);
    const std::size_t h_expl = Oracle::hits(pred.items, k, inst.truth.explore_part);
    CHECK(h == h_rep + h_expl);

    // RepR + ExplR = |P| / K.
    CHECK(m.rep_ratio + m.expl_ratio ==
          doctest::Approx(static_cast<double>(items.size()) / k).epsilon(1e-12));

    // Everything lies in [0, 1].
    for (double v : {m.recall, m.ndcg, m.precision, m.rep_ratio, m.expl_ratio}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

    // Against the independent scorer.
    CHECK(m.recall == Oracle::recall(pred, inst.truth.target));
    CHECK(m.ndcg == doctest::Approx(Oracle::ndcg(pred, inst.truth.target)).epsilon(1e-12));
  }
}

TEST_CASE("a repeat prediction item can only hit the repeat part") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<ItemId> item(0, 19);
  for (int trial = 0; trial < 200; ++trial) {
    ItemSet history_items;
    for (int i = 0; i < 6; ++i) history_items.push_back(item(rng));
    history_items = make_item_set(std::move(history_items));
    ItemSet target;
    for (int i = 0; i < 4; ++i) target.push_back(item(rng));
    target = make_item_set(std::move(target));
    const EvalInstance inst = make_instance({{0, history_items}}, target);

    for (ItemId e : history_items) {
      CHECK(Oracle::hits({e}, 1, inst.truth.explore_part) == 0);
    }
  }
}

TEST_CASE("phr_rep and phr_expl count hits against their own populations") {
  // Three instances: repeat hit, repeat miss, no repeat part at all.
  EvalCohort cohort;
  cohort.instances.push_back(make_instance({{0, {1, 2}}}, {1, 9}, "a"));  // rep {1}
  cohort.instances.push_back(make_instance({{0, {3, 4}}}, {3, 8}, "b"));  // rep {3}
  cohort.instances.push_back(make_instance({{0, {5}}}, {7}, "c"));        // rep empty
  const std::vector<RankedPrediction> preds{
      make_pred({1, 8}, 2, "a"),  // hits rep {1} and nothing in expl {9}
      make_pred({6, 8}, 2, "b"),  // misses rep {3}, hits expl {8}
      make_pred({7, 6}, 2, "c"),  // hits expl {7}
  };
  const auto reports = evaluate_cohort(cohort, preds, "m", "d", {2});
  const MetricsReport& r = reports.front();
  CHECK(r.n_r == 2);
  CHECK(r.n_e == 3);
  // Manual count: repeat hits 1 of 2; explore hits 2 of 3.
  CHECK(*r.phr_rep == doctest::Approx(0.5));
  CHECK(*r.phr_expl == doctest::Approx(2.0 / 3.0));

  SUBCASE("single repeat hit gives phr_rep of one") {
    EvalCohort solo;
    solo.instances.push_back(make_instance({{0, {1}}}, {1}, "a"));
    const auto rep = evaluate_cohort(solo, {make_pred({1}, 1, "a")}, "m", "d", {1});
    CHECK(*rep.front().phr_rep == 1.0);
    CHECK(!rep.front().phr_expl.has_value());
  }
}

TEST_CASE("evaluate_cohort truncates one prediction across several k") {
  EvalCohort cohort;
  cohort.instances.push_back(make_instance({{0, {1, 2}}}, {1, 4}, "a"));
  cohort.instances.push_back(make_instance({{0, {3}}}, {3}, "b"));
  std::vector<RankedPrediction> preds{make_pred({1, 4, 7}, 3, "a"),
                                      make_pred({9, 3, 5}, 3, "b")};
  const auto reports = evaluate_cohort(cohort, preds, "m", "d", {1, 3});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].k == 1);
  // k=1: a hits {1} -> recall 1/2; b misses -> 0.
  CHECK(reports[0].recall == doctest::Approx(0.25));
  CHECK(reports[1].k == 3);
  CHECK(reports[1].recall == doctest::Approx((1.0 + 1.0) / 2.0));

  SUBCASE("missing prediction is reported with its key") {
    preds.pop_back();
    CHECK_THROWS_WITH_AS(static_cast<void>(evaluate_cohort(cohort, preds, "m", "d", {1})),
                         doctest::Contains("b#0"), ValidationError);
  }
  SUBCASE("capacity below requested k is a config error") {
    CHECK_THROWS_AS(static_cast<void>(evaluate_cohort(cohort, preds, "m", "d", {4})),
                    ConfigError);
  }
}

TEST_CASE("metrics report round-trips through JSON and renders CSV") {
  const EvalInstance inst = make_instance({{0, {1, 2}}}, {1, 2});
  const MetricsReport report =
      aggregate({score_instance(make_pred({1, 3}, 2), inst)}, "gp-topfreq", "toy", 2);
  const MetricsReport back = MetricsReport::from_json(report.to_json());
  CHECK(back.method == report.method);
  CHECK(back.recall == report.recall);
  CHECK(back.recall_expl == report.recall_expl);
  CHECK(!back.recall_expl.has_value());
  const std::string row = report.csv_row();
  CHECK(row.rfind("gp-topfreq,toy,2,", 0) == 0);
  // Not-applicable cells stay empty.
  CHECK(row.find(",,") != std::string::npos);
}
