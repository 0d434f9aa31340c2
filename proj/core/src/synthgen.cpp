// SPDX-License-Identifier: Apache-2.0
#include "stylerec/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "stylerec/error.hpp"
#include "stylerec/io_util.hpp"
#include "stylerec/ranking.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

namespace {

std::string padded_id(char prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i + 1);
  if (digits.size() < width)
    digits.insert(digits.begin(), width - digits.size(), '0');
  return prefix + digits;
}

std::size_t id_width(std::size_t count) {
  std::size_t w = 1, p = 10;
  while (p < count) {
    ++w;
    p *= 10;
  }
  return w + 1;
}

std::size_t poisson(double lambda, Rng& rng) {
  if (lambda <= 0.0) return 0;
  // Knuth's product method, chunked so exp() never underflows.
  std::size_t total = 0;
  while (lambda > 30.0) {
    total += poisson(30.0, rng);
    lambda -= 30.0;
  }
  const double limit = std::exp(-lambda);
  double p = 1.0;
  std::size_t k = 0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return total + k - 1;
}

void normalize(Vec& v) {
  double norm = 0.0;
  for (const double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& x : v) x /= norm;
}

double seasonal(double season_amp, double phase, Minutes t) {
  const double years = static_cast<double>(t) / kMinutesPerYear;
  const double frac = years - std::floor(years);
  return season_amp * std::cos(2.0 * std::numbers::pi * (frac - phase));
}

}  // namespace

void GenConfig::validate() const {
  if (customers < 1 || articles < 1 || tags < 1 || fibers < 1 || clusters < 1 ||
      latent_dim < 2)
    throw GenerationError("gen config: counts must be >= 1 (latent_dim >= 2)");
  if (!(horizon_start < horizon_end))
    throw GenerationError("gen config: horizon start must precede end");
  if (test_days < 1 ||
      test_start() <= horizon_start)
    throw GenerationError("gen config: test window does not fit the horizon");
  if (drift_rate < 0.0 || season_amp < 0.0 || article_noise < 0.0 ||
      popularity_sd < 0.0)
    throw GenerationError("gen config: rates and amplitudes must be >= 0");
  if (mean_order_size < 1.0)
    throw GenerationError("gen config: mean order size must be >= 1");
  if (!(churn_rate > 0.0) || !(availability_target > 0.0) ||
      !(availability_target < 1.0))
    throw GenerationError("gen config: churn in (0,inf), availability in (0,1)");
  if (fresh_frac < 0.0 || recent_frac < 0.0 || fresh_frac + recent_frac >= 1.0)
    throw GenerationError("gen config: fresh + recent fractions must be in [0,1)");
  if (recent_days < 1)
    throw GenerationError("gen config: recent_days must be >= 1");
  if (price_pop_weight < 0.0 || price_pop_weight > 1.0)
    throw GenerationError("gen config: price_pop_weight must be in [0,1]");
}

int GroundTruth::article_index(const std::string& id) const {
  const auto it = article_idx_.find(id);
  return it == article_idx_.end() ? -1 : static_cast<int>(it->second);
}

int GroundTruth::customer_index(const std::string& id) const {
  const auto it = customer_idx_.find(id);
  return it == customer_idx_.end() ? -1 : static_cast<int>(it->second);
}

void GroundTruth::rebuild_index() {
  article_idx_.clear();
  customer_idx_.clear();
  for (std::size_t i = 0; i < article_ids.size(); ++i)
    article_idx_[article_ids[i]] = i;
  for (std::size_t i = 0; i < customer_ids.size(); ++i)
    customer_idx_[customer_ids[i]] = i;
}

const Vec& GroundTruth::style_at(std::size_t customer_idx, Minutes t) const {
  const auto& timeline = style_timeline[customer_idx];
  // Last checkpoint with valid_from <= t; before the first one, the start style.
  const Vec* best = &timeline.front().second;
  for (const auto& [from, style] : timeline) {
    if (from > t) break;
    best = &style;
  }
  return *best;
}

double GroundTruth::score(std::size_t customer_idx, std::size_t article_idx,
                          Minutes t) const {
  return dot(style_at(customer_idx, t), article_latent[article_idx]) +
         seasonal(season_amp, article_phase[article_idx], t);
}

Market generate_market(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng root(seed);
  const std::size_t latent = config.latent_dim;
  const std::size_t taste_dim = latent - 1;  // last coordinate = popularity
  const std::size_t cluster_count = std::min(config.clusters, config.tags);

  Market market;
  market.test_start = config.test_start();

  // Schema.
  const std::size_t tag_width = id_width(config.tags);
  for (std::size_t i = 0; i < config.tags; ++i)
    market.schema.tags.push_back(padded_id('t', i, tag_width));
  for (std::size_t i = 0; i < config.fibers; ++i)
    market.schema.fibers.push_back(padded_id('f', i, id_width(config.fibers)));
  market.schema.image_dim = 0;

  // Cluster archetypes: unit taste vectors plus an evenly spread season phase.
  Rng cluster_rng = root.fork(stable_hash("gen-clusters"));
  std::vector<Vec> archetype(cluster_count, Vec(taste_dim, 0.0));
  Vec cluster_phase(cluster_count, 0.0);
  for (std::size_t c = 0; c < cluster_count; ++c) {
    for (auto& x : archetype[c]) x = cluster_rng.gaussian();
    normalize(archetype[c]);
    cluster_phase[c] =
        static_cast<double>(c) / static_cast<double>(cluster_count);
  }
  const std::size_t tags_per_cluster =
      std::max<std::size_t>(1, config.tags / cluster_count);

  // Articles.
  Rng article_rng = root.fork(stable_hash("gen-articles"));
  const std::size_t a_width = id_width(config.articles);
  market.truth.latent_dim = latent;
  market.truth.season_amp = config.season_amp;

  const double mean_on_days = 1.0 / config.churn_rate;
  const double mean_off_days = mean_on_days *
                               (1.0 - config.availability_target) /
                               config.availability_target;
  const auto exp_days = [](double mean, Rng& rng) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return -mean * std::log(u);
  };

  for (std::size_t i = 0; i < config.articles; ++i) {
    Article a;
    a.id = padded_id('a', i, a_width);
    const std::size_t c = static_cast<std::size_t>(article_rng.below(cluster_count));

    // Cheap articles sell more; the price-explained share of popularity is
    // recoverable from content, the rest stays latent noise.
    const double price_z = article_rng.gaussian();
    a.log_price = 3.5 + 0.6 * price_z;
    const double w = config.price_pop_weight;
    const double pop_noise = std::sqrt(std::max(0.0, 1.0 - w * w));

    Vec v(latent, 0.0);
    for (std::size_t j = 0; j < taste_dim; ++j)
      v[j] = archetype[c][j] + config.article_noise * article_rng.gaussian();
    {
      Vec taste(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(taste_dim));
      normalize(taste);
      std::copy(taste.begin(), taste.end(), v.begin());
    }
    v[taste_dim] = config.popularity_sd *
                   (-w * price_z + pop_noise * article_rng.gaussian());
    double phase = cluster_phase[c] + 0.03 * article_rng.gaussian();
    phase -= std::floor(phase);

    // Tags: a few from the cluster's block, occasionally one stray.
    const std::size_t block_start = (c * tags_per_cluster) % config.tags;
    const std::size_t block_len =
        std::min(tags_per_cluster, config.tags - block_start);
    const std::size_t want =
        std::min(block_len, 2 + static_cast<std::size_t>(article_rng.below(3)));
    std::set<std::size_t> chosen;
    while (chosen.size() < want)
      chosen.insert(block_start + article_rng.below(block_len));
    if (article_rng.uniform() < 0.3)
      chosen.insert(static_cast<std::size_t>(article_rng.below(config.tags)));
    for (const auto tag_idx : chosen)
      a.tags.push_back(market.schema.tags[tag_idx]);
    std::sort(a.tags.begin(), a.tags.end());

    const std::size_t n_fibers =
        1 + static_cast<std::size_t>(article_rng.below(
                std::min<std::uint64_t>(3, config.fibers)));
    std::set<std::size_t> fiber_idx;
    while (fiber_idx.size() < n_fibers)
      fiber_idx.insert(static_cast<std::size_t>(article_rng.below(config.fibers)));
    double fiber_total = 0.0;
    std::vector<double> weights;
    for (std::size_t f = 0; f < n_fibers; ++f) {
      weights.push_back(0.1 + article_rng.uniform());
      fiber_total += weights.back();
    }
    std::size_t fi = 0;
    for (const auto f : fiber_idx)
      a.fabric.emplace_back(market.schema.fibers[f], weights[fi++] / fiber_total);

    // Availability classes: fresh articles enter only inside the test window
    // (the mean-score case of the baseline), recently launched ones enter
    // just before it (in store for the count window but barely sold), and
    // the rest alternate in/out of stock with exponential dwell times.
    const double class_draw = article_rng.uniform();
    if (class_draw < config.fresh_frac) {
      const Minutes span = config.horizon_end - market.test_start - kMinutesPerDay;
      const Minutes entry =
          market.test_start +
          static_cast<Minutes>(article_rng.below(
              static_cast<std::uint64_t>(std::max<Minutes>(1, span))));
      a.availability.push_back(AvailabilityWindow{entry, config.horizon_end});
    } else if (class_draw < config.fresh_frac + config.recent_frac) {
      const Minutes launch_span = config.recent_days * kMinutesPerDay;
      const Minutes entry =
          market.test_start - 1 -
          static_cast<Minutes>(article_rng.below(
              static_cast<std::uint64_t>(launch_span)));
      a.availability.push_back(AvailabilityWindow{entry, config.horizon_end});
    } else {
      bool on = article_rng.uniform() < config.availability_target;
      double cursor = static_cast<double>(config.horizon_start);
      const double horizon_end = static_cast<double>(config.horizon_end);
      while (cursor < horizon_end) {
        const double dwell =
            exp_days(on ? mean_on_days : mean_off_days, article_rng) *
            static_cast<double>(kMinutesPerDay);
        const double next = std::min(horizon_end, cursor + dwell);
        if (on && next - cursor >= 1.0)
          a.availability.push_back(AvailabilityWindow{
              static_cast<Minutes>(cursor), static_cast<Minutes>(next)});
        cursor = next;
        on = !on;
      }
      if (a.availability.empty()) {
        // Guarantee the article can be bought at least once.
        const Minutes entry =
            config.horizon_start +
            static_cast<Minutes>(article_rng.below(static_cast<std::uint64_t>(
                config.horizon_end - config.horizon_start - kMinutesPerDay)));
        a.availability.push_back(
            AvailabilityWindow{entry, entry + 30 * kMinutesPerDay});
      }
    }

    market.truth.article_ids.push_back(a.id);
    market.truth.article_latent.push_back(std::move(v));
    market.truth.article_phase.push_back(phase);
    market.catalog.articles.push_back(std::move(a));
  }
  market.catalog.rebuild_index();

  // Customers and sales.
  Rng customer_rng = root.fork(stable_hash("gen-customers"));
  const std::size_t c_width = id_width(config.customers);
  std::vector<PurchaseSequence> train, test;

  for (std::size_t k = 0; k < config.customers; ++k) {
    const std::string customer = padded_id('c', k, c_width);
    const std::size_t home =
        static_cast<std::size_t>(customer_rng.below(cluster_count));
    Vec style(latent, 0.0);
    for (std::size_t j = 0; j < taste_dim; ++j)
      style[j] = archetype[home][j] + 0.6 * customer_rng.gaussian();
    {
      Vec taste(style.begin(), style.begin() + static_cast<std::ptrdiff_t>(taste_dim));
      normalize(taste);
      std::copy(taste.begin(), taste.end(), style.begin());
    }
    style[taste_dim] = 1.0;  // shared popularity sensitivity

    const std::size_t n_orders =
        std::max<std::size_t>(1, poisson(config.mean_orders, customer_rng));
    std::set<Minutes> order_times;
    while (order_times.size() < n_orders)
      order_times.insert(
          config.horizon_start +
          static_cast<Minutes>(customer_rng.below(static_cast<std::uint64_t>(
              config.horizon_end - config.horizon_start))));

    std::vector<std::pair<Minutes, Vec>> timeline;
    timeline.emplace_back(config.horizon_start, style);

    PurchaseSequence train_seq{customer, {}};
    PurchaseSequence test_seq{customer, {}};
    Minutes prev_t = config.horizon_start;
    for (const Minutes t : order_times) {
      // Style drifts with elapsed time, stepped at purchase events only.
      // A zero drift rate contributes exactly nothing but draws the same
      // random numbers, so it only changes the values, not the stream.
      const double dt_days =
          static_cast<double>(t - prev_t) / static_cast<double>(kMinutesPerDay);
      const double step = config.drift_rate * std::sqrt(std::max(0.0, dt_days));
      for (auto& x : style) x += step * customer_rng.gaussian();
      prev_t = t;
      timeline.emplace_back(t, style);

      const auto available = in_store_indices(market.catalog, t);
      std::size_t size =
          1 + poisson(config.mean_order_size - 1.0, customer_rng);
      if (available.empty() || size > available.size())
        throw GenerationError("generate_market: order of size " +
                              std::to_string(size) + " at t=" +
                              std::to_string(t) + " exceeds the " +
                              std::to_string(available.size()) +
                              " articles in store");

      // Softmax over the in-store articles of the true affinity.
      std::vector<double> weight(available.size());
      double max_score = -1e300;
      for (std::size_t i = 0; i < available.size(); ++i) {
        const std::size_t a = available[i];
        const double s =
            dot(style, market.truth.article_latent[a]) +
            seasonal(config.season_amp, market.truth.article_phase[a], t);
        weight[i] = config.taste_sharpness * s;
        max_score = std::max(max_score, weight[i]);
      }
      double total = 0.0;
      for (auto& w : weight) {
        w = std::exp(w - max_score);
        total += w;
      }
      for (std::size_t pick = 0; pick < size; ++pick) {
        if (!(total > 0.0)) {
          // Incremental subtraction drifted; rebuild the mass exactly.
          total = 0.0;
          for (const double wgt : weight) total += std::max(0.0, wgt);
          if (!(total > 0.0))
            throw GenerationError(
                "generate_market: sampling weights vanished at t=" +
                std::to_string(t));
        }
        double u = customer_rng.uniform() * total;
        std::size_t chosen = available.size();
        for (std::size_t i = 0; i < available.size(); ++i) {
          if (weight[i] <= 0.0) continue;
          u -= weight[i];
          if (u <= 0.0) {
            chosen = i;
            break;
          }
        }
        if (chosen == available.size()) {
          // Rounding pushed u past the mass; take the last positive weight.
          for (std::size_t i = available.size(); i-- > 0;) {
            if (weight[i] > 0.0) {
              chosen = i;
              break;
            }
          }
        }
        PurchaseEvent e{customer, market.catalog.articles[available[chosen]].id, t};
        if (t >= market.test_start)
          test_seq.events.push_back(e);
        else
          train_seq.events.push_back(e);
        total -= weight[chosen];
        weight[chosen] = 0.0;
      }
    }
    market.truth.customer_ids.push_back(customer);
    market.truth.style_timeline.push_back(std::move(timeline));
    if (!train_seq.events.empty()) train.push_back(std::move(train_seq));
    if (!test_seq.events.empty()) test.push_back(std::move(test_seq));
  }

  market.train_sales = std::move(train);
  market.test_sales = std::move(test);
  market.truth.rebuild_index();
  return market;
}

std::vector<std::string> oracle_rank(const GroundTruth& truth,
                                     const std::string& customer, Minutes t,
                                     const std::vector<std::string>& candidates) {
  const int k = truth.customer_index(customer);
  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int a = truth.article_index(candidates[i]);
    if (a < 0)
      throw PreconditionError("oracle_rank: unknown article '" + candidates[i] +
                              "'");
    if (k >= 0)
      scores[i] = truth.score(static_cast<std::size_t>(k),
                              static_cast<std::size_t>(a), t);
  }
  const auto order = rank_by_score(scores, candidates);
  std::vector<std::string> out;
  out.reserve(order.size());
  for (const auto i : order) out.push_back(candidates[i]);
  return out;
}

namespace {
constexpr char kTruthHeader[] = "kind\tkey\tt\tvalues";

std::string join_vec(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

Vec parse_vec(const std::string& s, const std::string& ctx) {
  Vec v;
  for (const auto& part : split(s, ',')) v.push_back(parse_double(part, ctx));
  return v;
}
}  // namespace

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  std::ostringstream out;
  out << kTruthHeader << "\n";
  out << "meta\tlatent_dim\t\t" << truth.latent_dim << "\n";
  out << "meta\tseason_amp\t\t" << format_double(truth.season_amp) << "\n";
  for (std::size_t i = 0; i < truth.article_ids.size(); ++i)
    out << "article\t" << truth.article_ids[i] << '\t'
        << format_double(truth.article_phase[i]) << '\t'
        << join_vec(truth.article_latent[i]) << "\n";
  for (std::size_t k = 0; k < truth.customer_ids.size(); ++k)
    for (const auto& [from, style] : truth.style_timeline[k])
      out << "style\t" << truth.customer_ids[k] << '\t' << from << '\t'
          << join_vec(style) << "\n";
  write_text_file(path, out.str());
}

GroundTruth load_ground_truth(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kTruthHeader)
    throw ParseError(path + ": missing ground-truth header");
  GroundTruth truth;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(i + 1);
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 4) throw ParseError(ctx + ": expected 4 columns");
    if (cols[0] == "meta") {
      if (cols[1] == "latent_dim")
        truth.latent_dim = static_cast<std::size_t>(parse_uint(cols[3], ctx));
      else if (cols[1] == "season_amp")
        truth.season_amp = parse_double(cols[3], ctx);
      else
        throw ParseError(ctx + ": unknown meta key '" + cols[1] + "'");
    } else if (cols[0] == "article") {
      truth.article_ids.push_back(cols[1]);
      truth.article_phase.push_back(parse_double(cols[2], ctx));
      truth.article_latent.push_back(parse_vec(cols[3], ctx));
    } else if (cols[0] == "style") {
      if (truth.customer_ids.empty() || truth.customer_ids.back() != cols[1]) {
        truth.customer_ids.push_back(cols[1]);
        truth.style_timeline.emplace_back();
      }
      truth.style_timeline.back().emplace_back(parse_int(cols[2], ctx),
                                               parse_vec(cols[3], ctx));
    } else {
      throw ParseError(ctx + ": unknown record kind '" + cols[0] + "'");
    }
  }
  truth.rebuild_index();
  return truth;
}

}  // namespace stylerec
