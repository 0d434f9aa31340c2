// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "stylerec/catalog.hpp"

namespace stylerec {

/// Non-personalized popularity recommender: one score per article still
/// relevant after eval_start, shared by every customer.
struct PopularityTable {
  // (id, score) sorted by id; lookup by binary search.
  std::vector<std::pair<std::string, double>> scores;
  Minutes window_start = 0;
  Minutes window_end = 0;
  Minutes eval_start = 0;

  const double* score_of(const std::string& id) const;
};

/// Counts each article's sales inside [window_start, window_end). Articles
/// never available at or after eval_start are left out. Articles that only
/// enter inventory during the evaluation period (no availability overlapping
/// the count window) receive the mean count over the counted articles,
/// zero-sale counted articles included.
PopularityTable popularity_scores(const std::vector<PurchaseSequence>& sales,
                                  const Catalog& catalog, Minutes window_start,
                                  Minutes window_end, Minutes eval_start);

/// All scored articles by descending score, ties by ascending id.
std::vector<std::string> baseline_rank(const PopularityTable& table);

}  // namespace stylerec
