// SPDX-License-Identifier: Apache-2.0
#include "stylerec/ranking.hpp"

#include <algorithm>
#include <numeric>

#include "stylerec/error.hpp"

namespace stylerec {

std::vector<std::size_t> rank_by_score(const std::vector<double>& scores,
                                       const std::vector<std::string>& ids) {
  if (scores.size() != ids.size())
    throw DimensionError("rank_by_score: scores/ids size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return order;
}

}  // namespace stylerec
