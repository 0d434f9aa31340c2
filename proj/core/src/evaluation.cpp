// SPDX-License-Identifier: Apache-2.0
#include "stylerec/evaluation.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stylerec/io_util.hpp"
#include "stylerec/ranking.hpp"

namespace stylerec {

std::vector<double> intent_scores(const Vec& d,
                                  const std::vector<Vec>& candidate_dna) {
  std::vector<double> scores(candidate_dna.size());
  for (std::size_t i = 0; i < candidate_dna.size(); ++i)
    scores[i] = dot(candidate_dna[i], d);
  return scores;
}

std::vector<std::size_t> rank_purchases(const std::vector<std::string>& ranking,
                                        const std::vector<std::string>& purchased) {
  std::unordered_map<std::string, std::size_t> position;
  position.reserve(ranking.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) position[ranking[i]] = i + 1;
  std::vector<std::size_t> ranks;
  ranks.reserve(purchased.size());
  for (const auto& id : purchased) {
    const auto it = position.find(id);
    if (it == position.end())
      throw EvaluationError("rank_purchases: purchased article '" + id +
                            "' is not in the candidate ranking");
    ranks.push_back(it->second);
  }
  return ranks;
}

RocCurve cumulative_rank(const std::vector<std::size_t>& ranks, std::size_t z) {
  if (ranks.empty())
    throw EvaluationError("cumulative_rank: no ranks, AUC undefined");
  RocCurve curve;
  curve.cumulative.assign(z + 1, 0);
  double auc_sum = 0.0;
  for (const auto r : ranks) {
    if (r < 1 || r > z)
      throw PreconditionError("cumulative_rank: rank " + std::to_string(r) +
                              " outside [1, " + std::to_string(z) + "]");
    curve.cumulative[r] += 1;
    auc_sum += z == 1 ? 1.0
                      : static_cast<double>(z - r) / static_cast<double>(z - 1);
  }
  for (std::size_t j = 1; j <= z; ++j)
    curve.cumulative[j] += curve.cumulative[j - 1];
  curve.auc = auc_sum / static_cast<double>(ranks.size());
  return curve;
}

std::size_t rank_quantile(const RocCurve& curve, double q) {
  if (!(q > 0.0 && q <= 1.0))
    throw PreconditionError("rank_quantile: q must be in (0, 1]");
  const double target = q * static_cast<double>(curve.total());
  for (std::size_t j = 0; j < curve.cumulative.size(); ++j)
    if (static_cast<double>(curve.cumulative[j]) >= target) return j;
  return curve.z();
}

std::vector<EvalCase> build_eval_cases(const EvalContext& ctx) {
  std::unordered_map<std::string, const PurchaseSequence*> history;
  history.reserve(ctx.train_sales.size());
  for (const auto& seq : ctx.train_sales) history[seq.customer] = &seq;

  std::vector<EvalCase> cases;
  for (const auto& seq : ctx.test_sales) {
    EvalCase c;
    c.customer = seq.customer;
    std::set<std::string> bought;
    Minutes first = 0;
    bool any = false;
    for (const auto& e : seq.events) {
      if (e.t < ctx.window_start || e.t >= ctx.window_end) continue;
      if (!any || e.t < first) first = e.t;
      any = true;
      bought.insert(e.article);
    }
    if (!any) continue;
    c.eval_time = first;
    c.purchased.assign(bought.begin(), bought.end());
    const auto it = history.find(seq.customer);
    c.history = it == history.end() ? nullptr : it->second;
    cases.push_back(std::move(c));
  }
  std::sort(cases.begin(), cases.end(),
            [](const auto& a, const auto& b) { return a.customer < b.customer; });
  return cases;
}

ModelEvalResult evaluate_scored(const EvalContext& ctx, const ScoreFn& scorer) {
  const auto candidate_idx =
      in_store_during(ctx.catalog, ctx.window_start, ctx.window_end);
  if (candidate_idx.empty())
    throw EvaluationError("evaluate: no articles in store during the window");
  const std::size_t z = candidate_idx.size();

  std::vector<std::string> candidate_ids;
  candidate_ids.reserve(z);
  std::unordered_map<std::string, std::size_t> slot_of;
  slot_of.reserve(z);
  for (std::size_t i = 0; i < z; ++i) {
    candidate_ids.push_back(ctx.catalog.articles[candidate_idx[i]].id);
    slot_of[candidate_ids.back()] = i;
  }

  const auto cases = build_eval_cases(ctx);
  if (cases.empty())
    throw EvaluationError("evaluate: no test purchases inside the window");

  ModelEvalResult result;
  result.ranks.z = z;
  std::size_t no_history = 0;
  for (const auto& c : cases) no_history += c.history == nullptr ? 1 : 0;
  if (no_history > 0)
    result.notes.push_back(std::to_string(no_history) +
                           " test customer(s) without training history; "
                           "personalized models score them from the zero-flushed state");
  std::vector<std::size_t> all_ranks;
  for (const auto& c : cases) {
    const auto scores = scorer(c, candidate_idx);
    if (scores.size() != z)
      throw DimensionError("evaluate: scorer returned wrong candidate count");
    const auto order = rank_by_score(scores, candidate_ids);
    std::vector<std::size_t> rank_of_slot(z, 0);
    for (std::size_t pos = 0; pos < z; ++pos) rank_of_slot[order[pos]] = pos + 1;
    for (const auto& id : c.purchased) {
      const auto it = slot_of.find(id);
      if (it == slot_of.end())
        throw EvaluationError("evaluate: purchased article '" + id +
                              "' missing from the candidate set");
      const std::size_t r = rank_of_slot[it->second];
      result.ranks.entries.push_back(RankEntry{c.customer, id, r});
      all_ranks.push_back(r);
    }
  }

  result.curve = cumulative_rank(all_ranks, z);
  result.q10 = rank_quantile(result.curve, 0.10);
  result.q50 = rank_quantile(result.curve, 0.50);
  result.q90 = rank_quantile(result.curve, 0.90);
  return result;
}

ModelEvalResult evaluate_model(ModelKind kind, const EvalContext& ctx,
                               const StaticModel* static_model,
                               const LstmParams* dynamic_params) {
  switch (kind) {
    case ModelKind::baseline: {
      const PopularityTable table =
          popularity_scores(ctx.train_sales, ctx.catalog,
                            ctx.baseline_window_start, ctx.window_start,
                            ctx.window_start);
      ScoreFn fn = [&](const EvalCase&,
                       const std::vector<std::size_t>& candidates) {
        std::vector<double> scores(candidates.size(), 0.0);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          const double* s =
              table.score_of(ctx.catalog.articles[candidates[i]].id);
          scores[i] = s ? *s : 0.0;
        }
        return scores;
      };
      return evaluate_scored(ctx, fn);
    }
    case ModelKind::static_model: {
      if (!static_model)
        throw PreconditionError("evaluate_model: static model required");
      const auto dna =
          encode_catalog(static_model->encoder, ctx.catalog, ctx.schema);
      const Vec zero_style(static_model->encoder.output_dim(), 0.0);
      // Customers without a trained profile fall back to the neutral style.
      ScoreFn fn = [&](const EvalCase& c,
                       const std::vector<std::size_t>& candidates) {
        const int k = static_model->customer_index(c.customer);
        const Vec& s =
            k < 0 ? zero_style
                  : static_model->profiles[static_cast<std::size_t>(k)].s;
        std::vector<double> scores(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i)
          scores[i] = dot(dna[candidates[i]], s);
        return scores;
      };
      return evaluate_scored(ctx, fn);
    }
    case ModelKind::dynamic_model: {
      if (!static_model || !dynamic_params)
        throw PreconditionError(
            "evaluate_model: dynamic run needs the static model and LSTM params");
      const auto dna =
          encode_catalog(static_model->encoder, ctx.catalog, ctx.schema);
      ScoreFn fn = [&](const EvalCase& c,
                       const std::vector<std::size_t>& candidates) {
        EmbeddedSequence seq;
        seq.customer = c.customer;
        if (c.history) {
          seq = embed_sequence(*c.history, ctx.catalog, dna);
          Rng shuffle_rng =
              Rng(ctx.seed).fork(stable_hash(c.customer) ^ stable_hash("eval"));
          shuffle_orders_embedded(seq, shuffle_rng);
        }
        const auto styles = style_sequence(*dynamic_params, seq, c.eval_time);
        const Vec& d = styles.back().d;
        std::vector<double> scores(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i)
          scores[i] = dot(dna[candidates[i]], d);
        return scores;
      };
      return evaluate_scored(ctx, fn);
    }
  }
  throw PreconditionError("evaluate_model: unknown model kind");
}

std::vector<PurchaseEvent> cold_start_subset(
    const std::vector<PurchaseSequence>& test_sales,
    const std::vector<PurchaseSequence>& train_sales) {
  std::unordered_set<std::string> trained;
  for (const auto& seq : train_sales)
    for (const auto& e : seq.events) trained.insert(e.article);
  std::vector<PurchaseEvent> cold;
  for (const auto& seq : test_sales)
    for (const auto& e : seq.events)
      if (!trained.count(e.article)) cold.push_back(e);
  return cold;
}

std::optional<RocCurve> curve_for_articles(
    const RankTable& table, const std::vector<std::string>& articles) {
  const std::unordered_set<std::string> wanted(articles.begin(), articles.end());
  std::vector<std::size_t> ranks;
  for (const auto& e : table.entries)
    if (wanted.count(e.article)) ranks.push_back(e.rank);
  if (ranks.empty()) return std::nullopt;
  return cumulative_rank(ranks, table.z);
}

void write_roc(const std::string& path, const std::string& model_name,
               const RocCurve& curve, std::uint64_t seed) {
  std::ostringstream out;
  out << "# model=" << model_name << "\n";
  out << "# z=" << curve.z() << "\n";
  out << "# auc=" << format_double(curve.auc) << "\n";
  out << "# seed=" << seed << "\n";
  out << "j\tR_j\tfrac\n";
  const double total = static_cast<double>(curve.total());
  for (std::size_t j = 0; j < curve.cumulative.size(); ++j)
    out << j << '\t' << curve.cumulative[j] << '\t'
        << format_double(static_cast<double>(curve.cumulative[j]) / total)
        << '\n';
  write_text_file(path, out.str());
}

namespace {
constexpr char kMetricsHeader[] =
    "model\tauc\tq10\tq50\tq90\tparams\tcold_auc\tcold_purchases\tz\tpurchases\tseed";
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    out << r.model << '\t' << format_double(r.auc) << '\t' << r.q10 << '\t'
        << r.q50 << '\t' << r.q90 << '\t';
    if (r.param_count)
      out << *r.param_count;
    else
      out << '-';
    out << '\t';
    if (r.cold_auc)
      out << format_double(*r.cold_auc);
    else
      out << '-';
    out << '\t' << r.cold_purchases << '\t' << r.z << '\t' << r.purchases
        << '\t' << r.seed << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kMetricsHeader)
    throw ParseError(path + ": missing metrics header");
  std::vector<MetricsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 11)
      throw ParseError(path + ":" + std::to_string(i + 1) +
                       ": expected 11 columns");
    MetricsRow r;
    const std::string ctx = path + ":" + std::to_string(i + 1);
    r.model = cols[0];
    r.auc = parse_double(cols[1], ctx);
    r.q10 = static_cast<std::size_t>(parse_uint(cols[2], ctx));
    r.q50 = static_cast<std::size_t>(parse_uint(cols[3], ctx));
    r.q90 = static_cast<std::size_t>(parse_uint(cols[4], ctx));
    if (cols[5] != "-")
      r.param_count = static_cast<std::size_t>(parse_uint(cols[5], ctx));
    if (cols[6] != "-") r.cold_auc = parse_double(cols[6], ctx);
    r.cold_purchases = static_cast<std::size_t>(parse_uint(cols[7], ctx));
    r.z = static_cast<std::size_t>(parse_uint(cols[8], ctx));
    r.purchases = static_cast<std::size_t>(parse_uint(cols[9], ctx));
    r.seed = parse_uint(cols[10], ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace stylerec
