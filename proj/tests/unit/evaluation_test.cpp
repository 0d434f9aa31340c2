// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "stylerec/evaluation.hpp"
#include "stylerec/rng.hpp"
#include "stylerec/synthgen.hpp"

using namespace stylerec;

namespace {

// Independent oracle: computes R_j by comparing every (rank, j) pair and the
// AUC as the average height of the normalized curve over j = 1..z-1.
RocCurve brute_force_curve(const std::vector<std::size_t>& ranks, std::size_t z) {
  RocCurve curve;
  curve.cumulative.assign(z + 1, 0);
  for (std::size_t j = 0; j <= z; ++j) {
    std::uint64_t count = 0;
    for (const auto r : ranks)
      if (r <= j) ++count;
    curve.cumulative[j] = count;
  }
  if (z <= 1) {
    curve.auc = 1.0;
    return curve;
  }
  double area = 0.0;
  for (std::size_t j = 1; j < z; ++j)
    area += static_cast<double>(curve.cumulative[j]) /
            static_cast<double>(curve.cumulative[z]);
  curve.auc = area / static_cast<double>(z - 1);
  return curve;
}

}  // namespace

TEST_CASE("intent_scores") {
  SUBCASE("zero style scores everything zero") {
    const auto s = intent_scores(Vec{0, 0}, {{1, 2}, {3, 4}});
    CHECK(s == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("scores are linear in the embedding") {
    const auto s = intent_scores(Vec{1.0, 0.5}, {{2, 2}, {4, 4}});
    CHECK(s[1] == doctest::Approx(2.0 * s[0]).epsilon(1e-12));
  }

  SUBCASE("matches the per-candidate dot oracle") {
    Rng rng(3);
    Vec d(5);
    for (auto& x : d) x = rng.gaussian();
    std::vector<Vec> dna;
    for (int i = 0; i < 20; ++i) {
      Vec f(5);
      for (auto& x : f) x = rng.gaussian();
      dna.push_back(f);
    }
    const auto s = intent_scores(d, dna);
    for (std::size_t i = 0; i < dna.size(); ++i)
      CHECK(s[i] == doctest::Approx(dot(dna[i], d)).epsilon(1e-12));
  }
}

TEST_CASE("rank_purchases") {
  const std::vector<std::string> ranking{"a", "b", "c", "d"};

  CHECK(rank_purchases(ranking, {"a"}) == std::vector<std::size_t>{1});
  CHECK(rank_purchases(ranking, {"a", "b", "c", "d"}) ==
        std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(rank_purchases(ranking, {"d", "b"}) == std::vector<std::size_t>{4, 2});
  CHECK_THROWS_AS(rank_purchases(ranking, {"zz"}), EvaluationError);

  SUBCASE("matches a linear scan oracle on a random instance") {
    Rng rng(9);
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) ids.push_back("x" + std::to_string(100 + i));
    auto shuffled = ids;
    rng.shuffle(shuffled);
    std::vector<std::string> purchased{shuffled[3], shuffled[17], shuffled[29]};
    const auto ranks = rank_purchases(shuffled, purchased);
    for (std::size_t i = 0; i < purchased.size(); ++i) {
      std::size_t pos = 0;
      for (std::size_t j = 0; j < shuffled.size(); ++j)
        if (shuffled[j] == purchased[i]) pos = j + 1;
      CHECK(ranks[i] == pos);
    }
  }
}

TEST_CASE("cumulative_rank") {
  SUBCASE("worked example: ranks 1 and 3 among four candidates") {
    const RocCurve c = cumulative_rank({1, 3}, 4);
    CHECK(c.cumulative == std::vector<std::uint64_t>{0, 1, 1, 2, 2});
    CHECK(c.auc == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("all top ranks give a perfect score") {
    const RocCurve c = cumulative_rank({1, 1, 1}, 10);
    CHECK(c.auc == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("all bottom ranks give zero") {
    const RocCurve c = cumulative_rank({10, 10}, 10);
    CHECK(c.auc == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("uniform ranks average to one half") {
    Rng rng(5);
    std::vector<std::size_t> ranks;
    const std::size_t z = 1000;
    for (int i = 0; i < 20000; ++i)
      ranks.push_back(1 + static_cast<std::size_t>(rng.below(z)));
    const RocCurve c = cumulative_rank(ranks, z);
    CHECK(c.auc == doctest::Approx(0.5).epsilon(0.04));
  }

  SUBCASE("empty rank list is an error") {
    CHECK_THROWS_AS(cumulative_rank({}, 5), EvaluationError);
  }

  SUBCASE("out-of-range ranks are rejected") {
    CHECK_THROWS_AS(cumulative_rank({0}, 5), PreconditionError);
    CHECK_THROWS_AS(cumulative_rank({6}, 5), PreconditionError);
  }

  SUBCASE("matches the brute-force oracle on random instances") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t z = 1 + static_cast<std::size_t>(rng.below(50));
      const std::size_t n = 1 + static_cast<std::size_t>(rng.below(30));
      std::vector<std::size_t> ranks;
      for (std::size_t i = 0; i < n; ++i)
        ranks.push_back(1 + static_cast<std::size_t>(rng.below(z)));
      const RocCurve got = cumulative_rank(ranks, z);
      const RocCurve want = brute_force_curve(ranks, z);
      CHECK(got.cumulative == want.cumulative);
      CHECK(got.auc == doctest::Approx(want.auc).epsilon(1e-12));
    }
  }
}

TEST_CASE("rank_quantile") {
  const RocCurve c = cumulative_rank({1, 3}, 4);  // R = [0,1,1,2,2]
  CHECK(rank_quantile(c, 0.5) == 1);
  CHECK(rank_quantile(c, 0.9) == 3);
  CHECK(rank_quantile(c, 1.0) == 3);
  CHECK_THROWS_AS(rank_quantile(c, 0.0), PreconditionError);
  CHECK_THROWS_AS(rank_quantile(c, 1.5), PreconditionError);
}

TEST_CASE("auc is invariant under strictly increasing score transforms") {
  // The ranking only depends on score order, so exp() must not change it.
  Rng rng(21);
  Catalog catalog;
  for (int i = 0; i < 12; ++i) {
    Article a;
    a.id = "a" + std::to_string(100 + i);
    a.availability = {{0, 10000}};
    catalog.articles.push_back(a);
  }
  catalog.rebuild_index();
  Schema schema;

  std::vector<PurchaseSequence> train;
  std::vector<PurchaseSequence> test;
  test.push_back({"c1", {{"c1", "a103", 5000}, {"c1", "a108", 5100}}});
  test.push_back({"c2", {{"c2", "a100", 5200}}});

  EvalContext ctx{catalog, schema, train, test, 5000, 6000, 4000, 7};

  std::vector<double> base_scores(12);
  for (auto& s : base_scores) s = rng.gaussian();

  const ScoreFn raw = [&](const EvalCase&, const std::vector<std::size_t>& cand) {
    std::vector<double> out;
    for (const auto i : cand) out.push_back(base_scores[i]);
    return out;
  };
  const ScoreFn transformed =
      [&](const EvalCase&, const std::vector<std::size_t>& cand) {
        std::vector<double> out;
        for (const auto i : cand) out.push_back(std::exp(base_scores[i]));
        return out;
      };
  const auto r1 = evaluate_scored(ctx, raw);
  const auto r2 = evaluate_scored(ctx, transformed);
  CHECK(r1.curve.auc == r2.curve.auc);
  CHECK(r1.curve.cumulative == r2.curve.cumulative);
}

TEST_CASE("evaluate_scored on a single customer with the top purchase") {
  Catalog catalog;
  for (int i = 0; i < 3; ++i) {
    Article a;
    a.id = "a" + std::to_string(i + 1);
    a.availability = {{0, 10000}};
    catalog.articles.push_back(a);
  }
  catalog.rebuild_index();
  Schema schema;
  std::vector<PurchaseSequence> train;
  std::vector<PurchaseSequence> test;
  test.push_back({"c1", {{"c1", "a2", 5000}}});
  EvalContext ctx{catalog, schema, train, test, 5000, 6000, 4000, 1};

  const ScoreFn scorer = [&](const EvalCase&,
                             const std::vector<std::size_t>& cand) {
    std::vector<double> out;
    for (const auto i : cand) out.push_back(catalog.articles[i].id == "a2" ? 5.0 : 0.0);
    return out;
  };
  const auto r = evaluate_scored(ctx, scorer);
  CHECK(r.ranks.z == 3);
  REQUIRE(r.ranks.entries.size() == 1);
  CHECK(r.ranks.entries[0].rank == 1);
  CHECK(r.curve.auc == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("purchases outside the window are ignored") {
    std::vector<PurchaseSequence> late;
    late.push_back({"c1", {{"c1", "a2", 9999999}}});
    EvalContext empty_ctx{catalog, schema, train, late, 5000, 6000, 4000, 1};
    CHECK_THROWS_AS(evaluate_scored(empty_ctx, scorer), EvaluationError);
  }
}

TEST_CASE("baseline lands near one half on a taste-free market") {
  // With sharpness, seasonality, popularity spread and drift all zero, every
  // in-store article is equally likely to sell, so last week's counts carry
  // no information about this week.
  GenConfig cfg;
  cfg.customers = 300;
  cfg.articles = 250;
  cfg.tags = 20;
  cfg.fibers = 4;
  cfg.clusters = 5;
  cfg.latent_dim = 4;
  cfg.horizon_end = 200 * kMinutesPerDay;
  cfg.test_days = 8;
  cfg.mean_orders = 12.0;
  cfg.mean_order_size = 1.8;
  cfg.taste_sharpness = 0.0;
  cfg.season_amp = 0.0;
  cfg.popularity_sd = 0.0;
  cfg.drift_rate = 0.0;
  cfg.fresh_frac = 0.0;
  cfg.recent_frac = 0.0;
  const Market m = generate_market(cfg, 777);

  Schema schema = m.schema;
  EvalContext ctx{m.catalog, schema,          m.train_sales, m.test_sales,
                  m.test_start, cfg.horizon_end, m.test_start - 7 * kMinutesPerDay,
                  3};
  const auto r = evaluate_model(ModelKind::baseline, ctx, nullptr, nullptr);
  CHECK(r.ranks.entries.size() > 150);  // enough purchases for the estimate
  CHECK(r.curve.auc > 0.4);
  CHECK(r.curve.auc < 0.6);
}

TEST_CASE("cold_start_subset") {
  std::vector<PurchaseSequence> train;
  train.push_back({"c1", {{"c1", "a1", 10}, {"c1", "a2", 20}}});
  std::vector<PurchaseSequence> test;
  test.push_back({"c1", {{"c1", "a1", 100}, {"c1", "a3", 110}}});
  test.push_back({"c2", {{"c2", "a2", 120}, {"c2", "a4", 130}, {"c2", "a4", 140}}});

  SUBCASE("articles sold only in the test window qualify") {
    const auto cold = cold_start_subset(test, train);
    REQUIRE(cold.size() == 3);
    CHECK(cold[0].article == "a3");
    CHECK(cold[1].article == "a4");
    CHECK(cold[2].article == "a4");
  }

  SUBCASE("no new articles means an empty subset") {
    std::vector<PurchaseSequence> repeat;
    repeat.push_back({"c9", {{"c9", "a1", 100}}});
    CHECK(cold_start_subset(repeat, train).empty());
  }

  SUBCASE("matches a set-difference oracle on a mixed instance") {
    std::set<std::string> trained;
    for (const auto& s : train)
      for (const auto& e : s.events) trained.insert(e.article);
    const auto cold = cold_start_subset(test, train);
    for (const auto& e : cold) CHECK(trained.count(e.article) == 0);
    std::size_t expected = 0;
    for (const auto& s : test)
      for (const auto& e : s.events)
        if (!trained.count(e.article)) ++expected;
    CHECK(cold.size() == expected);
  }
}

TEST_CASE("curve_for_articles filters the rank table") {
  RankTable table;
  table.z = 10;
  table.entries = {{"c1", "a1", 1}, {"c1", "a2", 5}, {"c2", "a1", 2}};
  const auto curve = curve_for_articles(table, {"a1"});
  REQUIRE(curve.has_value());
  CHECK(curve->total() == 2);
  CHECK(curve->auc == doctest::Approx(((10.0 - 1) / 9 + (10.0 - 2) / 9) / 2)
                          .epsilon(1e-12));
  CHECK_FALSE(curve_for_articles(table, {"zz"}).has_value());
}

TEST_CASE("metrics files round-trip") {
  std::vector<MetricsRow> rows(2);
  rows[0].model = "baseline";
  rows[0].auc = 0.75;
  rows[0].q10 = 3;
  rows[0].q50 = 50;
  rows[0].q90 = 900;
  rows[0].cold_purchases = 4;
  rows[0].cold_auc = 0.5;
  rows[0].z = 1000;
  rows[0].purchases = 123;
  rows[0].seed = 42;
  rows[1].model = "dynamic";
  rows[1].auc = 0.875;
  rows[1].param_count = 433280;
  rows[1].z = 1000;
  rows[1].purchases = 123;
  rows[1].seed = 42;

  const std::string path = (std::filesystem::temp_directory_path() /
                            "stylerec_metrics_test.tsv").string();
  write_metrics(path, rows);
  const auto back = read_metrics(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].model == "baseline");
  CHECK(back[0].auc == 0.75);
  CHECK_FALSE(back[0].param_count.has_value());
  CHECK(back[0].cold_auc.has_value());
  CHECK(back[1].param_count == 433280);
  CHECK_FALSE(back[1].cold_auc.has_value());
}
