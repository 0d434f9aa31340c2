// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../test_util.hpp"
#include "stylerec/static_model.hpp"
#include "stylerec/rng.hpp"

using namespace stylerec;

namespace {

EncoderParams random_encoder(std::size_t in, std::size_t hidden,
                             std::size_t out, Rng& rng) {
  EncoderParams enc;
  EncoderLayer h;
  h.w = Mat(hidden, in);
  h.b.assign(hidden, 0.0);
  h.act = Activation::rectifier;
  for (auto& x : h.w.data) x = 0.7 * rng.gaussian();
  for (auto& x : h.b) x = 0.3 * rng.gaussian();
  enc.layers.push_back(std::move(h));
  EncoderLayer top;
  top.w = Mat(out, hidden);
  top.b.assign(out, 0.0);
  top.act = Activation::identity;
  for (auto& x : top.w.data) x = 0.7 * rng.gaussian();
  for (auto& x : top.b) x = 0.3 * rng.gaussian();
  enc.layers.push_back(std::move(top));
  return enc;
}

// Flatten/unflatten all trainables so finite differences can probe them.
Vec flatten(const EncoderParams& enc,
            const std::vector<StaticCustomerProfile>& profiles) {
  Vec out;
  for (const auto& l : enc.layers) {
    out.insert(out.end(), l.w.data.begin(), l.w.data.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  for (const auto& p : profiles) {
    out.insert(out.end(), p.s.begin(), p.s.end());
    out.push_back(p.beta);
  }
  return out;
}

void unflatten(const Vec& flat, EncoderParams& enc,
               std::vector<StaticCustomerProfile>& profiles) {
  std::size_t pos = 0;
  for (auto& l : enc.layers) {
    std::copy(flat.begin() + pos, flat.begin() + pos + l.w.size(),
              l.w.data.begin());
    pos += l.w.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + l.b.size(), l.b.begin());
    pos += l.b.size();
  }
  for (auto& p : profiles) {
    std::copy(flat.begin() + pos, flat.begin() + pos + p.s.size(), p.s.begin());
    pos += p.s.size();
    p.beta = flat[pos++];
  }
}

double relative_error(double a, double b) {
  return std::fabs(a - b) / std::max({1e-5, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_CASE("encode_article basics") {
  SUBCASE("zero weights give the zero embedding") {
    EncoderParams enc;
    enc.layers.push_back({Mat(3, 4), Vec(3, 0.0), Activation::rectifier});
    enc.layers.push_back({Mat(2, 3), Vec(2, 0.0), Activation::identity});
    CHECK(encode_article(enc, Vec{1, 2, 3, 4}) == Vec{0, 0});
  }

  SUBCASE("a single identity layer passes features through") {
    EncoderParams enc;
    Mat eye(3, 3);
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    enc.layers.push_back({eye, Vec(3, 0.0), Activation::identity});
    CHECK(encode_article(enc, Vec{-1, 0.5, 2}) == Vec{-1, 0.5, 2});
  }

  SUBCASE("random two-layer instance matches the composed oracle") {
    Rng rng(3);
    const EncoderParams enc = random_encoder(5, 4, 3, rng);
    Vec x(5);
    for (auto& v : x) v = rng.gaussian();
    // Oracle: affine + rectifier composed by hand.
    Vec h = affine(enc.layers[0].w, enc.layers[0].b, x);
    for (auto& v : h) v = std::max(0.0, v);
    const Vec want = affine(enc.layers[1].w, enc.layers[1].b, h);
    const Vec got = encode_article(enc, x);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }

  SUBCASE("identical features give identical embeddings") {
    Rng rng(5);
    const EncoderParams enc = random_encoder(4, 3, 2, rng);
    const Vec x{0.3, -1.2, 0.0, 2.2};
    CHECK(encode_article(enc, x) == encode_article(enc, x));
  }

  SUBCASE("dimension mismatch throws") {
    Rng rng(6);
    const EncoderParams enc = random_encoder(4, 3, 2, rng);
    CHECK_THROWS_AS(encode_article(enc, Vec{1, 2}), DimensionError);
  }
}

TEST_CASE("purchase_prob closed forms") {
  StaticCustomerProfile prof;
  prof.s = {0.5, 0.5};
  prof.beta = 0.0;
  CHECK(purchase_prob(Vec{0, 0}, prof) == doctest::Approx(0.5).epsilon(1e-15));
  prof.beta = 50.0;
  CHECK(purchase_prob(Vec{0, 0}, prof) >= 1.0 - 1e-20);
  prof.beta = -1.0;
  CHECK(purchase_prob(Vec{1, 1}, prof) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("static_loss") {
  // Two articles, three customers, hand-set embeddings.
  PurchaseMatrix pm;
  pm.customers = {"c1", "c2", "c3"};
  pm.articles = {"a1", "a2"};
  pm.buyers = {{0, 2}, {1}};
  std::vector<StaticCustomerProfile> profiles(3);
  for (auto& p : profiles) {
    p.s = {0.0, 0.0};
    p.beta = 0.0;
  }

  SUBCASE("all probabilities at one half give ln 2") {
    const std::vector<Vec> dna{{0, 0}, {0, 0}};
    const double loss = static_loss(pm, {0, 1}, dna, profiles);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("confident correct predictions drive the loss to zero") {
    profiles[0].beta = 60.0;
    profiles[1].beta = -60.0;
    profiles[2].beta = 60.0;
    const std::vector<Vec> dna{{0, 0}};
    // Article a1 is bought by c1 and c3 and avoided by c2: all correct.
    const double loss = static_loss(pm, {0}, dna, profiles);
    CHECK(loss < 1e-11);
  }

  SUBCASE("clamping keeps the loss finite even when confidently wrong") {
    profiles[0].beta = -1000.0;  // c1 bought a1, prediction says never
    const std::vector<Vec> dna{{0, 0}};
    const double loss = static_loss(pm, {0}, dna, profiles);
    CHECK(std::isfinite(loss));
  }

  SUBCASE("random instance matches a scalar loop oracle") {
    Rng rng(9);
    PurchaseMatrix rpm;
    rpm.customers = {"c1", "c2", "c3", "c4"};
    rpm.articles = {"a1", "a2", "a3"};
    rpm.buyers = {{1, 3}, {}, {0, 1, 2}};
    std::vector<StaticCustomerProfile> profs(4);
    for (auto& p : profs) {
      p.s = {rng.gaussian(), rng.gaussian()};
      p.beta = rng.gaussian();
    }
    std::vector<Vec> dna;
    for (int a = 0; a < 3; ++a) dna.push_back({rng.gaussian(), rng.gaussian()});

    double want = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      double article_loss = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        const bool bought = std::find(rpm.buyers[a].begin(), rpm.buyers[a].end(),
                                      k) != rpm.buyers[a].end();
        const double p = sigmoid(dot(dna[a], profs[k].s) + profs[k].beta);
        article_loss += bought ? -std::log(p) : -std::log(1.0 - p);
      }
      want += article_loss / 4.0;
    }
    want /= 3.0;
    const double got = static_loss(rpm, {0, 1, 2}, dna, profs);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("static loss gradients match finite differences on a 2x2 toy") {
  Rng rng(77);
  const std::size_t features = 3, hidden = 3, dim = 2;
  PurchaseMatrix pm;
  pm.customers = {"c1", "c2"};
  pm.articles = {"a1", "a2"};
  pm.buyers = {{0}, {0, 1}};
  const std::vector<std::size_t> batch{0, 1};
  std::vector<Vec> feats{{0.5, -1.0, 0.25}, {1.5, 0.75, -0.5}};

  for (int trial = 0; trial < 5; ++trial) {
    EncoderParams enc = random_encoder(features, hidden, dim, rng);
    std::vector<StaticCustomerProfile> profiles(2);
    for (auto& p : profiles) {
      p.s = {0.4 * rng.gaussian(), 0.4 * rng.gaussian()};
      p.beta = 0.4 * rng.gaussian();
    }

    const StaticGrads grads =
        static_loss_gradients(enc, feats, batch, pm, profiles, nullptr);
    Vec analytic;
    for (std::size_t li = 0; li < grads.w.size(); ++li) {
      analytic.insert(analytic.end(), grads.w[li].data.begin(),
                      grads.w[li].data.end());
      analytic.insert(analytic.end(), grads.b[li].begin(), grads.b[li].end());
    }
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      analytic.insert(analytic.end(), grads.s.row(k), grads.s.row(k) + dim);
      analytic.push_back(grads.beta[k]);
    }

    EncoderParams probe_enc = enc;
    std::vector<StaticCustomerProfile> probe_prof = profiles;
    const auto f = [&](const Vec& flat) {
      unflatten(flat, probe_enc, probe_prof);
      std::vector<Vec> dna;
      for (const auto& x : feats) dna.push_back(encode_article(probe_enc, x));
      return static_loss(pm, batch, dna, probe_prof);
    };
    const Vec numeric = finite_diff_grad(f, flatten(enc, profiles), 1e-5);

    REQUIRE(numeric.size() == analytic.size());
    for (std::size_t i = 0; i < numeric.size(); ++i)
      CHECK(relative_error(analytic[i], numeric[i]) < 1e-4);
  }
}

TEST_CASE("train_static") {
  // Tiny market: 4 articles, 3 customers, availability everywhere.
  Schema schema;
  schema.tags = {"t1", "t2"};
  schema.fibers = {"f1"};
  Catalog catalog;
  for (int i = 0; i < 4; ++i) {
    Article a;
    a.id = "a" + std::to_string(i + 1);
    if (i % 2 == 0) a.tags = {"t1"};
    else a.tags = {"t2"};
    a.log_price = 1.0 + i;
    a.availability = {{0, 1000000}};
    catalog.articles.push_back(a);
  }
  catalog.rebuild_index();

  std::vector<PurchaseSequence> sales;
  sales.push_back({"c1", {{"c1", "a1", 10}, {"c1", "a2", 20}, {"c1", "a3", 30},
                          {"c1", "a4", 40}}});
  sales.push_back({"c2", {{"c2", "a2", 15}}});
  sales.push_back({"c3", {{"c3", "a1", 5}, {"c3", "a3", 25}}});
  const PurchaseMatrix pm = build_purchase_matrix(
      sales, {"c1", "c2", "c3"}, {"a1", "a2", "a3", "a4"});

  StaticTrainConfig cfg;
  cfg.hidden = 6;
  cfg.embedding_dim = 4;
  cfg.batch_articles = 2;
  cfg.seed = 5;

  SUBCASE("zero epochs return the initialization unchanged") {
    cfg.epochs = 0;
    const StaticTrainResult r = train_static(catalog, schema, pm, cfg);
    CHECK(r.train_loss.empty());
    CHECK(r.val_loss.size() == 1);
    // beta starts at the clamped logit of the purchase rate.
    const int c1 = r.model.customer_index("c1");
    REQUIRE(c1 >= 0);
    CHECK(r.model.profiles[static_cast<std::size_t>(c1)].beta ==
          doctest::Approx(6.0));  // rate 1 clamps at +6
  }

  SUBCASE("a customer who bought everything keeps a positive bias and rising p") {
    cfg.epochs = 3;
    const StaticTrainResult r = train_static(catalog, schema, pm, cfg);
    const int c1 = r.model.customer_index("c1");
    REQUIRE(c1 >= 0);
    CHECK(r.model.profiles[static_cast<std::size_t>(c1)].beta > 0.0);
    // Loss on the validation slice must not increase over training.
    CHECK(r.val_loss.back() <= r.val_loss.front());
  }

  SUBCASE("an all-ones matrix pushes every probability up, epoch by epoch") {
    const PurchaseMatrix ones = build_purchase_matrix(
        {sales[0]}, {"c1"}, {"a1", "a2", "a3", "a4"});
    const auto mean_p = [&](std::size_t epochs) {
      StaticTrainConfig c = cfg;
      c.epochs = epochs;
      const StaticTrainResult r = train_static(catalog, schema, ones, c);
      double total = 0.0;
      for (const auto& art : catalog.articles) {
        const Vec f = encode_article(r.model.encoder,
                                     feature_vector(art, schema));
        total += purchase_prob(f, r.model.profiles[0]);
      }
      return total / static_cast<double>(catalog.size());
    };
    const double p0 = mean_p(0), p1 = mean_p(1), p2 = mean_p(2), p3 = mean_p(3);
    CHECK(p1 >= p0);
    CHECK(p2 >= p1);
    CHECK(p3 >= p2);
    CHECK(p3 > p0);
  }

  SUBCASE("same seed twice gives bitwise-identical parameters") {
    cfg.epochs = 2;
    const StaticTrainResult r1 = train_static(catalog, schema, pm, cfg);
    const StaticTrainResult r2 = train_static(catalog, schema, pm, cfg);
    REQUIRE(r1.model.encoder.layers.size() == r2.model.encoder.layers.size());
    for (std::size_t li = 0; li < r1.model.encoder.layers.size(); ++li) {
      CHECK(r1.model.encoder.layers[li].w.data ==
            r2.model.encoder.layers[li].w.data);
      CHECK(r1.model.encoder.layers[li].b == r2.model.encoder.layers[li].b);
    }
    for (std::size_t k = 0; k < r1.model.profiles.size(); ++k) {
      CHECK(r1.model.profiles[k].s == r2.model.profiles[k].s);
      CHECK(r1.model.profiles[k].beta == r2.model.profiles[k].beta);
    }
  }
}

TEST_CASE("static_rank") {
  StaticCustomerProfile prof;
  prof.s = {1.0, 0.0};
  prof.beta = -3.0;

  SUBCASE("single candidate") {
    const auto order = static_rank(prof, {{2.0, 0.0}}, {"a1"});
    CHECK(order == std::vector<std::size_t>{0});
  }

  SUBCASE("higher score first") {
    const auto order = static_rank(prof, {{1.0, 0.0}, {2.0, 0.0}}, {"a1", "a2"});
    CHECK(order == std::vector<std::size_t>{1, 0});
  }

  SUBCASE("ties break by ascending article id") {
    const auto order =
        static_rank(prof, {{1.0, 5.0}, {1.0, -5.0}}, {"b", "a"});
    CHECK(order == std::vector<std::size_t>{1, 0});
  }

  SUBCASE("matches a full sort oracle and ignores any constant shift") {
    Rng rng(55);
    std::vector<Vec> dna;
    std::vector<std::string> ids;
    for (int i = 0; i < 50; ++i) {
      dna.push_back({rng.gaussian(), rng.gaussian()});
      ids.push_back("a" + std::to_string(100 + i));
    }
    const auto order = static_rank(prof, dna, ids);

    std::vector<std::pair<double, std::string>> oracle;
    for (std::size_t i = 0; i < dna.size(); ++i)
      oracle.emplace_back(-dot(dna[i], prof.s), ids[i]);
    std::sort(oracle.begin(), oracle.end());
    REQUIRE(order.size() == oracle.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      CHECK(ids[order[i]] == oracle[i].second);

    // beta (a per-customer constant on every score) cannot change the order.
    StaticCustomerProfile shifted = prof;
    shifted.beta = 1234.5;
    CHECK(static_rank(shifted, dna, ids) == order);
  }
}

TEST_CASE("static checkpoint round-trips bit-exactly") {
  Rng rng(66);
  StaticModel model;
  model.encoder = random_encoder(5, 4, 3, rng);
  model.customer_ids = {"c1", "c2"};
  model.profiles.resize(2);
  for (auto& p : model.profiles) {
    p.s = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    p.beta = rng.gaussian();
  }
  model.rebuild_index();

  testutil::TempDir tmp;
  const auto path = tmp.file("static.bin");
  save_static_checkpoint(model, path, 987654321);

  std::uint64_t seed = 0;
  const StaticModel loaded = load_static_checkpoint(path, &seed);
  CHECK(seed == 987654321);
  REQUIRE(loaded.encoder.layers.size() == model.encoder.layers.size());
  for (std::size_t li = 0; li < model.encoder.layers.size(); ++li) {
    CHECK(loaded.encoder.layers[li].w.data == model.encoder.layers[li].w.data);
    CHECK(loaded.encoder.layers[li].b == model.encoder.layers[li].b);
    CHECK(loaded.encoder.layers[li].act == model.encoder.layers[li].act);
  }
  CHECK(loaded.customer_ids == model.customer_ids);
  for (std::size_t k = 0; k < model.profiles.size(); ++k) {
    CHECK(loaded.profiles[k].s == model.profiles[k].s);
    CHECK(loaded.profiles[k].beta == model.profiles[k].beta);
  }

  // Saving the loaded model reproduces the file byte for byte.
  const auto copy = tmp.file("copy.bin");
  save_static_checkpoint(loaded, copy, seed);
  CHECK(testutil::slurp(path) == testutil::slurp(copy));
}
