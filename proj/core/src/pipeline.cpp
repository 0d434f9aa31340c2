// SPDX-License-Identifier: Apache-2.0
#include "stylerec/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <set>
#include <sstream>

#include "stylerec/baseline.hpp"
#include "stylerec/evaluation.hpp"
#include "stylerec/io_util.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "'");
}

void require_file(const std::string& path, const std::string& producer) {
  if (!file_exists(path))
    throw DependencyError("missing '" + path + "'; run `" + producer +
                          "` first");
}

void write_loss_log(const std::string& path, const Vec& train_loss,
                    const Vec& val_loss) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\tval_loss\n";
  out << "0\t-\t" << format_double(val_loss.front()) << "\n";
  for (std::size_t i = 0; i < train_loss.size(); ++i)
    out << (i + 1) << '\t' << format_double(train_loss[i]) << '\t'
        << format_double(val_loss[i + 1]) << '\n';
  write_text_file(path, out.str());
}

struct LoadedData {
  Schema schema;
  Catalog catalog;
  std::vector<PurchaseSequence> train;
  std::vector<PurchaseSequence> test;
};

LoadedData load_data(const OutPaths& paths, bool with_test) {
  require_file(paths.schema(), "gen");
  require_file(paths.catalog(), "gen");
  require_file(paths.sales_train(), "gen");
  LoadedData data;
  data.schema = load_schema(paths.schema());
  data.catalog = load_catalog(paths.catalog(), data.schema);
  data.train = load_sales(paths.sales_train(), data.catalog);
  if (with_test) {
    require_file(paths.sales_test(), "gen");
    data.test = load_sales(paths.sales_test(), data.catalog);
  }
  return data;
}

}  // namespace

std::string OutPaths::in(const std::string& key,
                         const std::string& fallback) const {
  if (overrides) {
    const auto it = overrides->find(key);
    if (it != overrides->end()) return it->second;
  }
  return dir + "/" + fallback;
}

OutPaths make_paths(const RunConfig& cfg, const std::string& out_dir) {
  return OutPaths{out_dir, &cfg.path_overrides};
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage) {
  return Rng(seed).fork(stable_hash(stage)).seed();
}

void run_gen(const RunConfig& cfg, const std::string& out_dir,
             std::ostream* log) {
  const std::uint64_t seed = cfg.require_seed();  // before any writes
  cfg.gen.validate();
  const OutPaths paths = make_paths(cfg, out_dir);
  ensure_dir(out_dir);
  const Market market = generate_market(cfg.gen, derive_seed(seed, "gen"));
  save_schema(market.schema, paths.schema());
  save_catalog(market.catalog, paths.catalog());
  save_sales(market.train_sales, paths.sales_train());
  save_sales(market.test_sales, paths.sales_test());
  save_ground_truth(market.truth, paths.ground_truth());
  if (log) {
    std::size_t train_n = 0, test_n = 0;
    for (const auto& s : market.train_sales) train_n += s.events.size();
    for (const auto& s : market.test_sales) test_n += s.events.size();
    *log << "gen: " << market.catalog.size() << " articles, "
         << market.truth.customer_ids.size() << " customers, " << train_n
         << " train sales, " << test_n << " test sales\n";
  }
}

void run_train_static(const RunConfig& cfg, const std::string& out_dir,
                      std::ostream* log) {
  const std::uint64_t seed = cfg.require_seed();
  const OutPaths paths = make_paths(cfg, out_dir);
  ensure_dir(out_dir);
  const LoadedData data = load_data(paths, false);

  std::vector<std::string> customers;
  customers.reserve(data.train.size());
  for (const auto& seq : data.train) customers.push_back(seq.customer);
  std::vector<std::string> articles;
  articles.reserve(data.catalog.size());
  for (const auto& a : data.catalog.articles) articles.push_back(a.id);

  const PurchaseMatrix pm = build_purchase_matrix(data.train, customers, articles);
  StaticTrainConfig train_cfg = cfg.static_cfg;
  train_cfg.seed = derive_seed(seed, "static");
  const StaticTrainResult result =
      train_static(data.catalog, data.schema, pm, train_cfg, log);
  save_static_checkpoint(result.model, paths.static_checkpoint(), train_cfg.seed);
  write_loss_log(paths.static_loss_log(), result.train_loss, result.val_loss);
}

void run_train_dynamic(const RunConfig& cfg, const std::string& out_dir,
                       std::ostream* log) {
  const std::uint64_t seed = cfg.require_seed();
  const OutPaths paths = make_paths(cfg, out_dir);
  ensure_dir(out_dir);
  // The LSTM consumes pretrained embeddings, so the static model comes first.
  require_file(paths.static_checkpoint(), "train-static");
  const LoadedData data = load_data(paths, false);
  const StaticModel static_model =
      load_static_checkpoint(paths.static_checkpoint());
  const auto dna = encode_catalog(static_model.encoder, data.catalog, data.schema);

  TrainConfigDyn train_cfg = cfg.dyn_cfg;
  train_cfg.seed = derive_seed(seed, "dynamic");
  const DynTrainResult result =
      train_dynamic(data.catalog, data.train, dna, train_cfg, log);
  if (log && result.negative_fallbacks > 0)
    *log << "train-dynamic: " << result.negative_fallbacks
         << " negative draws fell back to the whole catalog\n";
  save_dynamic_checkpoint(
      result.params,
      DynCheckpointMeta{train_cfg.kind, train_cfg.negatives, train_cfg.seed},
      paths.dynamic_checkpoint());
  write_loss_log(paths.dynamic_loss_log(), result.train_loss, result.val_loss);
}

void run_eval(const RunConfig& cfg, const std::string& out_dir,
              std::ostream* log) {
  const std::uint64_t seed = cfg.require_seed();
  const OutPaths paths = make_paths(cfg, out_dir);
  ensure_dir(out_dir);
  const LoadedData data = load_data(paths, true);

  const Minutes window_start =
      cfg.eval.window_start.value_or(cfg.gen.test_start());
  const Minutes window_end = cfg.eval.window_end.value_or(cfg.gen.horizon_end);
  if (!(window_start < window_end))
    throw ConfigError("eval: window start must precede window end");

  EvalContext ctx{data.catalog,
                  data.schema,
                  data.train,
                  data.test,
                  window_start,
                  window_end,
                  window_start - cfg.eval.baseline_window_days * kMinutesPerDay,
                  derive_seed(seed, "eval")};

  // Unique article ids of test purchases that never sold in training.
  const auto cold_events = cold_start_subset(data.test, data.train);
  std::set<std::string> cold_set;
  for (const auto& e : cold_events) cold_set.insert(e.article);
  const std::vector<std::string> cold_articles(cold_set.begin(), cold_set.end());

  // Deduplicate the requested models, keeping the configured order.
  std::vector<std::string> models;
  for (const auto& m : cfg.eval.models)
    if (std::find(models.begin(), models.end(), m) == models.end())
      models.push_back(m);

  StaticModel static_model;
  bool have_static = false;
  const auto need_static = [&]() {
    if (!have_static) {
      require_file(paths.static_checkpoint(), "train-static");
      static_model = load_static_checkpoint(paths.static_checkpoint());
      have_static = true;
    }
  };

  std::vector<MetricsRow> rows;
  for (const auto& name : models) {
    ModelEvalResult result;
    std::optional<std::size_t> param_count;
    if (name == "baseline") {
      result = evaluate_model(ModelKind::baseline, ctx, nullptr, nullptr);
    } else if (name == "static") {
      need_static();
      result = evaluate_model(ModelKind::static_model, ctx, &static_model, nullptr);
      param_count = static_model.param_count();
    } else if (name == "dynamic") {
      need_static();
      require_file(paths.dynamic_checkpoint(), "train-dynamic");
      const LstmParams params =
          load_dynamic_checkpoint(paths.dynamic_checkpoint());
      result = evaluate_model(ModelKind::dynamic_model, ctx, &static_model, &params);
      param_count = params.param_count();
    } else if (name == "oracle") {
      require_file(paths.ground_truth(), "gen");
      const GroundTruth truth = load_ground_truth(paths.ground_truth());
      ScoreFn fn = [&](const EvalCase& c,
                       const std::vector<std::size_t>& candidates) {
        const int k = truth.customer_index(c.customer);
        std::vector<double> scores(candidates.size(), 0.0);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          const int a =
              truth.article_index(ctx.catalog.articles[candidates[i]].id);
          if (a >= 0 && k >= 0)
            scores[i] = truth.score(static_cast<std::size_t>(k),
                                    static_cast<std::size_t>(a), c.eval_time);
        }
        return scores;
      };
      result = evaluate_scored(ctx, fn);
    } else {
      throw ConfigError("eval: unknown model '" + name + "'");
    }

    write_roc(paths.roc(name), name, result.curve, seed);

    MetricsRow row;
    row.model = name;
    row.auc = result.curve.auc;
    row.q10 = result.q10;
    row.q50 = result.q50;
    row.q90 = result.q90;
    row.param_count = param_count;
    const auto cold_curve = curve_for_articles(result.ranks, cold_articles);
    if (cold_curve) {
      row.cold_auc = cold_curve->auc;
      row.cold_purchases = static_cast<std::size_t>(cold_curve->total());
    }
    row.z = result.ranks.z;
    row.purchases = result.ranks.entries.size();
    row.seed = seed;
    rows.push_back(std::move(row));
    if (log) {
      *log << "eval " << name << ": auc " << format_double(result.curve.auc)
           << " over " << result.ranks.entries.size() << " purchases, z="
           << result.ranks.z << "\n";
      for (const auto& note : result.notes) *log << "eval " << name << ": " << note << "\n";
    }
  }
  write_metrics(paths.metrics(), rows);
}

std::string run_report(const RunConfig& cfg, const std::string& out_dir) {
  const OutPaths paths = make_paths(cfg, out_dir);
  require_file(paths.metrics(), "eval");
  const auto rows = read_metrics(paths.metrics());

  std::ostringstream out;
  out << std::left << std::setw(10) << "model" << std::right << std::setw(8)
      << "AUC" << std::setw(9) << "10%" << std::setw(9) << "50%" << std::setw(9)
      << "90%" << std::setw(10) << "#params" << std::setw(10) << "cold AUC"
      << std::setw(8) << "cold n" << "\n";
  for (const auto& r : rows) {
    std::ostringstream auc, cold;
    auc << std::fixed << std::setprecision(1) << 100.0 * r.auc << "%";
    if (r.cold_auc)
      cold << std::fixed << std::setprecision(1) << 100.0 * *r.cold_auc << "%";
    else
      cold << "-";
    out << std::left << std::setw(10) << r.model << std::right << std::setw(8)
        << auc.str() << std::setw(9) << r.q10 << std::setw(9) << r.q50
        << std::setw(9) << r.q90 << std::setw(10)
        << (r.param_count ? std::to_string(*r.param_count) : "-")
        << std::setw(10) << cold.str() << std::setw(8) << r.cold_purchases
        << "\n";
  }
  const std::string text = out.str();
  write_text_file(paths.report(), text);
  return text;
}

}  // namespace stylerec
