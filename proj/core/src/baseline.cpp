// SPDX-License-Identifier: Apache-2.0
#include "stylerec/baseline.hpp"

#include <algorithm>
#include <unordered_map>

#include "stylerec/error.hpp"
#include "stylerec/ranking.hpp"

namespace stylerec {

const double* PopularityTable::score_of(const std::string& id) const {
  const auto it = std::lower_bound(
      scores.begin(), scores.end(), id,
      [](const auto& entry, const std::string& key) { return entry.first < key; });
  if (it == scores.end() || it->first != id) return nullptr;
  return &it->second;
}

PopularityTable popularity_scores(const std::vector<PurchaseSequence>& sales,
                                  const Catalog& catalog, Minutes window_start,
                                  Minutes window_end, Minutes eval_start) {
  if (!(window_start < window_end) || !(window_end <= eval_start))
    throw PreconditionError(
        "popularity_scores: need window_start < window_end <= eval_start");

  std::unordered_map<std::string, double> counts;
  for (const auto& seq : sales)
    for (const auto& e : seq.events)
      if (e.t >= window_start && e.t < window_end) counts[e.article] += 1.0;

  PopularityTable table;
  table.window_start = window_start;
  table.window_end = window_end;
  table.eval_start = eval_start;

  double counted_sum = 0.0;
  std::size_t counted_n = 0;
  std::vector<std::size_t> entering;  // catalog indices scored by the mean rule
  for (std::size_t i = 0; i < catalog.articles.size(); ++i) {
    const Article& a = catalog.articles[i];
    // Relevance horizon is open-ended: any availability at or after eval_start.
    bool relevant = false;
    for (const auto& w : a.availability)
      if (w.end > eval_start) relevant = true;
    if (!relevant) continue;
    const auto it = counts.find(a.id);
    const double c = it == counts.end() ? 0.0 : it->second;
    // Mean rule only for articles that could not be bought during the count
    // window; anything with window availability keeps its count, zero included.
    if (c > 0.0 || a.available_in(window_start, window_end)) {
      table.scores.emplace_back(a.id, c);
      counted_sum += c;
      counted_n += 1;
    } else {
      entering.push_back(i);
    }
  }
  const double mean =
      counted_n == 0 ? 0.0 : counted_sum / static_cast<double>(counted_n);
  for (const auto i : entering)
    table.scores.emplace_back(catalog.articles[i].id, mean);

  std::sort(table.scores.begin(), table.scores.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return table;
}

std::vector<std::string> baseline_rank(const PopularityTable& table) {
  std::vector<std::string> ids;
  std::vector<double> scores;
  ids.reserve(table.scores.size());
  scores.reserve(table.scores.size());
  for (const auto& [id, score] : table.scores) {
    ids.push_back(id);
    scores.push_back(score);
  }
  const auto order = rank_by_score(scores, ids);
  std::vector<std::string> out;
  out.reserve(order.size());
  for (const auto i : order) out.push_back(ids[i]);
  return out;
}

}  // namespace stylerec
