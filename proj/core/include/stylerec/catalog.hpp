// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stylerec/numerics.hpp"

namespace stylerec {

/// Timestamps are integer minutes since 2008-01-01T00:00Z.
using Minutes = std::int64_t;

constexpr double kMinutesPerYear = 525960.0;  // 365.25 days
constexpr Minutes kMinutesPerDay = 24 * 60;

/// Half-open stock interval [start, end).
struct AvailabilityWindow {
  Minutes start = 0;
  Minutes end = 0;
};

/// Ordered tag and fiber vocabularies; fixes the feature-vector layout.
struct Schema {
  std::vector<std::string> tags;
  std::vector<std::string> fibers;
  std::size_t image_dim = 0;

  std::size_t feature_dim() const {
    return tags.size() + 1 + fibers.size() + image_dim;
  }
  /// Index of a tag id, or -1 if the tag is not part of the schema.
  int tag_index(const std::string& id) const;
  int fiber_index(const std::string& id) const;

 private:
  mutable std::unordered_map<std::string, std::size_t> tag_idx_;
  mutable std::unordered_map<std::string, std::size_t> fiber_idx_;
};

struct Article {
  std::string id;
  std::vector<std::string> tags;
  double log_price = 0.0;
  std::vector<std::pair<std::string, double>> fabric;  // fiber id -> fraction
  std::optional<Vec> image_feat;
  std::vector<AvailabilityWindow> availability;  // sorted, non-overlapping

  bool available_at(Minutes t) const;
  /// True if any window intersects [from, to).
  bool available_in(Minutes from, Minutes to) const;
};

struct Catalog {
  std::vector<Article> articles;  // stable order = file order

  std::size_t size() const { return articles.size(); }
  /// Index of an article id, or -1 when unknown.
  int index_of(const std::string& id) const;
  const Article* find(const std::string& id) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct PurchaseEvent {
  std::string customer;
  std::string article;
  Minutes t = 0;
};

/// One customer's events, sorted by timestamp (equal stamps keep input order).
struct PurchaseSequence {
  std::string customer;
  std::vector<PurchaseEvent> events;
};

/// Sparse binary article x customer purchase matrix.
struct PurchaseMatrix {
  std::vector<std::string> customers;
  std::vector<std::string> articles;
  /// Per article, the sorted list of customer indices that bought it.
  std::vector<std::vector<std::uint32_t>> buyers;

  std::size_t pair_count() const;
  bool bought(std::size_t article_idx, std::size_t customer_idx) const;
};

// --- validation ----------------------------------------------------------

/// Checks all Article invariants (fabric sum, tags in schema, window order).
/// Throws ParseError naming the offending article.
void validate_article(const Article& a, const Schema& schema);

// --- file formats (tab-separated, header line required) -------------------

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

Catalog load_catalog(const std::string& path, const Schema& schema);
void save_catalog(const Catalog& catalog, const std::string& path);

/// Groups rows by customer and time-sorts each group (stable, so equal
/// timestamps keep file order). Sequences come back sorted by customer id.
std::vector<PurchaseSequence> load_sales(const std::string& path,
                                         const Catalog& catalog);
void save_sales(const std::vector<PurchaseSequence>& sales,
                const std::string& path);

// --- queries --------------------------------------------------------------

/// Ids of all articles in store at time t, in catalog order.
std::vector<std::string> in_store(const Catalog& catalog, Minutes t);

/// Catalog indices of all articles in store at time t, ascending.
std::vector<std::size_t> in_store_indices(const Catalog& catalog, Minutes t);

/// Catalog indices of articles available at any moment of [from, to).
std::vector<std::size_t> in_store_during(const Catalog& catalog, Minutes from,
                                         Minutes to);

/// Fixed layout [tag multi-hot | log_price | fabric fractions | image or 0s].
Vec feature_vector(const Article& a, const Schema& schema);

/// (article, customer) incidence from event data; duplicates collapse.
PurchaseMatrix build_purchase_matrix(const std::vector<PurchaseSequence>& sales,
                                     const std::vector<std::string>& customers,
                                     const std::vector<std::string>& articles);

}  // namespace stylerec
