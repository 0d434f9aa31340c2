// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace stylerec {

/// Permutation of [0, n) ordering candidates by descending score; ties break
/// by ascending id. Every ranking in the project goes through this so the tie
/// rule is uniform across models.
std::vector<std::size_t> rank_by_score(const std::vector<double>& scores,
                                       const std::vector<std::string>& ids);

}  // namespace stylerec
