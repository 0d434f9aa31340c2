// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stylerec/catalog.hpp"
#include "stylerec/numerics.hpp"

namespace stylerec {

/// Synthetic-market knobs. Articles draw latent vectors around per-cluster
/// archetypes that also decide their tags, so content correlates with taste
/// and cold-start articles stay learnable. Customer styles drift as a random
/// walk stepped at purchase times; purchase probabilities are a softmax over
/// the in-store articles of (style . latent + seasonal term).
struct GenConfig {
  std::size_t customers = 2000;
  std::size_t articles = 5000;
  std::size_t tags = 60;
  std::size_t fibers = 8;
  std::size_t clusters = 12;
  std::size_t latent_dim = 8;  // last coordinate carries article popularity

  Minutes horizon_start = 0;
  Minutes horizon_end = 1096 * kMinutesPerDay;  // three years
  Minutes test_days = 8;

  double mean_orders = 24.0;      // per customer over the horizon
  double mean_order_size = 1.8;   // 1 + Poisson(mean - 1)
  double drift_rate = 0.012;      // style step scale per sqrt(day)
  double season_amp = 1.2;
  double taste_sharpness = 6.0;   // softmax inverse temperature
  double article_noise = 0.35;    // latent jitter around the cluster archetype
  double popularity_sd = 0.5;
  double churn_rate = 0.02;            // per-day probability of leaving stock
  double availability_target = 0.55;   // steady-state in-store fraction
  double fresh_frac = 0.06;   // articles entering only during the test window
  double recent_frac = 0.06;  // articles launched shortly before the test window
  Minutes recent_days = 14;   // how shortly
  double price_pop_weight = 0.8;  // how much of popularity the price explains

  Minutes test_start() const { return horizon_end - test_days * kMinutesPerDay; }
  void validate() const;  // throws GenerationError
};

/// Everything the models cannot see: exact latents, phases and style paths.
struct GroundTruth {
  std::size_t latent_dim = 0;
  double season_amp = 0.0;
  std::vector<std::string> article_ids;
  std::vector<Vec> article_latent;
  Vec article_phase;
  std::vector<std::string> customer_ids;
  /// Per customer: (valid-from timestamp, style) checkpoints, ascending.
  /// Styles are piecewise constant between purchases.
  std::vector<std::vector<std::pair<Minutes, Vec>>> style_timeline;

  int article_index(const std::string& id) const;
  int customer_index(const std::string& id) const;
  void rebuild_index();

  const Vec& style_at(std::size_t customer_idx, Minutes t) const;
  double score(std::size_t customer_idx, std::size_t article_idx, Minutes t) const;

 private:
  std::unordered_map<std::string, std::size_t> article_idx_;
  std::unordered_map<std::string, std::size_t> customer_idx_;
};

struct Market {
  Schema schema;
  Catalog catalog;
  std::vector<PurchaseSequence> train_sales;
  std::vector<PurchaseSequence> test_sales;
  GroundTruth truth;
  Minutes test_start = 0;
};

/// Fully seed-deterministic; the same (config, seed) pair gives byte-identical
/// files when saved.
Market generate_market(const GenConfig& config, std::uint64_t seed);

/// Best achievable personalized ranking: descending true score, ties by id.
std::vector<std::string> oracle_rank(const GroundTruth& truth,
                                     const std::string& customer, Minutes t,
                                     const std::vector<std::string>& candidates);

void save_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace stylerec
