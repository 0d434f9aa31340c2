// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stylerec/baseline.hpp"
#include "stylerec/catalog.hpp"
#include "stylerec/dynamic_model.hpp"
#include "stylerec/static_model.hpp"

namespace stylerec {

/// Unnormalized affinity of every candidate to a style vector. Plain scalar
/// products: no sigmoid and no bias, these scores only exist to be sorted.
std::vector<double> intent_scores(const Vec& d,
                                  const std::vector<Vec>& candidate_dna);

/// 1-based positions of the purchased articles inside a total ranking,
/// returned in the purchased list's order.
std::vector<std::size_t> rank_purchases(const std::vector<std::string>& ranking,
                                        const std::vector<std::string>& purchased);

/// Cumulative rank distribution R_0..R_z and its area under the curve.
struct RocCurve {
  std::vector<std::uint64_t> cumulative;  // length z + 1, R_0 = 0
  double auc = 0.0;

  std::size_t z() const { return cumulative.size() - 1; }
  std::uint64_t total() const { return cumulative.back(); }
};

/// R_j = number of ranks <= j; auc = mean of (z - r) / (z - 1) over all
/// evaluated purchases (a single-candidate ranking scores 1 by convention).
RocCurve cumulative_rank(const std::vector<std::size_t>& ranks, std::size_t z);

/// Smallest j with R_j / R_z >= q, for q in (0, 1].
std::size_t rank_quantile(const RocCurve& curve, double q);

struct RankEntry {
  std::string customer;
  std::string article;
  std::size_t rank = 0;
};

struct RankTable {
  std::size_t z = 0;
  std::vector<RankEntry> entries;
};

/// One test customer: when to evaluate, what they bought, what the models may
/// look at (their pre-window history).
struct EvalCase {
  std::string customer;
  Minutes eval_time = 0;
  std::vector<std::string> purchased;      // unique, ascending
  const PurchaseSequence* history = nullptr;  // may be null
};

struct EvalContext {
  const Catalog& catalog;
  const Schema& schema;
  const std::vector<PurchaseSequence>& train_sales;
  const std::vector<PurchaseSequence>& test_sales;
  Minutes window_start = 0;
  Minutes window_end = 0;
  Minutes baseline_window_start = 0;  // popularity count window
  std::uint64_t seed = 0;
};

struct ModelEvalResult {
  RankTable ranks;
  RocCurve curve;
  std::size_t q10 = 0;
  std::size_t q50 = 0;
  std::size_t q90 = 0;
  std::vector<std::string> notes;
};

enum class ModelKind : std::uint8_t { baseline = 0, static_model = 1, dynamic_model = 2 };

/// Scores one customer's candidates; slot i corresponds to candidate_idx[i].
using ScoreFn = std::function<std::vector<double>(
    const EvalCase&, const std::vector<std::size_t>& candidate_idx)>;

/// Test customers joined with their training history, sorted by customer id.
std::vector<EvalCase> build_eval_cases(const EvalContext& ctx);

/// Shared backtest protocol: candidates are the articles in store at any
/// moment of the window; each case's purchases are ranked by the given scorer
/// and aggregated into one cumulative rank curve.
ModelEvalResult evaluate_scored(const EvalContext& ctx, const ScoreFn& scorer);

/// The three paper models on top of evaluate_scored. static_model is required
/// for both the static and the dynamic runs (the dynamic model consumes its
/// embeddings); dynamic_params only for the dynamic run.
ModelEvalResult evaluate_model(ModelKind kind, const EvalContext& ctx,
                               const StaticModel* static_model,
                               const LstmParams* dynamic_params);

/// Test purchases whose article never sold during training. Embeddings for
/// these exist only through the content encoder.
std::vector<PurchaseEvent> cold_start_subset(
    const std::vector<PurchaseSequence>& test_sales,
    const std::vector<PurchaseSequence>& train_sales);

/// Curve over the subset of rank entries whose article is in `articles`.
/// Returns nullopt when no entry matches.
std::optional<RocCurve> curve_for_articles(
    const RankTable& table, const std::vector<std::string>& articles);

// Report files.
void write_roc(const std::string& path, const std::string& model_name,
               const RocCurve& curve, std::uint64_t seed);

struct MetricsRow {
  std::string model;
  double auc = 0.0;
  std::size_t q10 = 0, q50 = 0, q90 = 0;
  std::optional<std::size_t> param_count;
  std::optional<double> cold_auc;
  std::size_t cold_purchases = 0;
  std::size_t z = 0;
  std::size_t purchases = 0;
  std::uint64_t seed = 0;
};

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::string& path);

}  // namespace stylerec
