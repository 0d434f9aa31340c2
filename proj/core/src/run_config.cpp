// SPDX-License-Identifier: Apache-2.0
#include "stylerec/run_config.hpp"

#include <algorithm>

#include "stylerec/io_util.hpp"

namespace stylerec {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
  return s.substr(a, b - a);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    return parse_double(v, key);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t to_uint(const std::string& v, const std::string& key) {
  try {
    return parse_uint(v, key);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

std::int64_t to_int(const std::string& v, const std::string& key) {
  try {
    return parse_int(v, key);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("config: seed is required");
  return *seed;
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "sigmoid") return LossKind::sigmoid;
  if (s == "softmax") return LossKind::softmax;
  if (s == "rank") return LossKind::rank;
  throw ConfigError("config: unknown loss kind '" + s + "'");
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::sigmoid: return "sigmoid";
    case LossKind::softmax: return "softmax";
    case LossKind::rank: return "rank";
  }
  return "?";
}

TimeEncoding parse_time_encoding(const std::string& s) {
  if (s == "annual") return TimeEncoding::annual_phase;
  if (s == "raw") return TimeEncoding::raw_years;
  throw ConfigError("config: unknown time encoding '" + s + "'");
}

const char* time_encoding_name(TimeEncoding enc) {
  return enc == TimeEncoding::annual_phase ? "annual" : "raw";
}

void apply_config_line(RunConfig& cfg, const std::string& section,
                       const std::string& key, const std::string& value) {
  const std::string full = section.empty() ? key : section + "." + key;
  if (section.empty() || section == "run") {
    if (key == "seed") {
      cfg.seed = to_uint(value, full);
      return;
    }
    throw ConfigError("config: unknown key '" + full + "'");
  }
  if (section == "gen") {
    auto& g = cfg.gen;
    if (key == "customers") g.customers = to_uint(value, full);
    else if (key == "articles") g.articles = to_uint(value, full);
    else if (key == "tags") g.tags = to_uint(value, full);
    else if (key == "fibers") g.fibers = to_uint(value, full);
    else if (key == "clusters") g.clusters = to_uint(value, full);
    else if (key == "latent_dim") g.latent_dim = to_uint(value, full);
    else if (key == "horizon_days")
      g.horizon_end = g.horizon_start +
                      static_cast<Minutes>(to_uint(value, full)) * kMinutesPerDay;
    else if (key == "test_days") g.test_days = to_int(value, full);
    else if (key == "mean_orders") g.mean_orders = to_double(value, full);
    else if (key == "mean_order_size") g.mean_order_size = to_double(value, full);
    else if (key == "drift_rate") g.drift_rate = to_double(value, full);
    else if (key == "season_amp") g.season_amp = to_double(value, full);
    else if (key == "taste_sharpness") g.taste_sharpness = to_double(value, full);
    else if (key == "article_noise") g.article_noise = to_double(value, full);
    else if (key == "popularity_sd") g.popularity_sd = to_double(value, full);
    else if (key == "churn_rate") g.churn_rate = to_double(value, full);
    else if (key == "availability_target")
      g.availability_target = to_double(value, full);
    else if (key == "fresh_frac") g.fresh_frac = to_double(value, full);
    else if (key == "recent_frac") g.recent_frac = to_double(value, full);
    else if (key == "recent_days") g.recent_days = to_int(value, full);
    else if (key == "price_pop_weight") g.price_pop_weight = to_double(value, full);
    else throw ConfigError("config: unknown key '" + full + "'");
    return;
  }
  if (section == "static") {
    auto& s = cfg.static_cfg;
    if (key == "hidden") s.hidden = to_uint(value, full);
    else if (key == "embedding_dim") s.embedding_dim = to_uint(value, full);
    else if (key == "epochs") s.epochs = to_uint(value, full);
    else if (key == "batch") s.batch_articles = to_uint(value, full);
    else if (key == "lr") s.adam.lr = to_double(value, full);
    else throw ConfigError("config: unknown key '" + full + "'");
    return;
  }
  if (section == "dynamic") {
    auto& d = cfg.dyn_cfg;
    if (key == "hidden") d.hidden = to_uint(value, full);
    else if (key == "loss") d.kind = parse_loss_kind(value);
    else if (key == "negatives") d.negatives = to_uint(value, full);
    else if (key == "epochs") d.epochs = to_uint(value, full);
    else if (key == "batch") d.batch_sequences = to_uint(value, full);
    else if (key == "lr") d.adam.lr = to_double(value, full);
    else if (key == "clip_norm") d.clip_norm = to_double(value, full);
    else if (key == "time_encoding") d.time_enc = parse_time_encoding(value);
    else throw ConfigError("config: unknown key '" + full + "'");
    return;
  }
  if (section == "eval") {
    auto& e = cfg.eval;
    if (key == "models") {
      e.models.clear();
      for (const auto& m : split(value, ',')) {
        const std::string name = trim(m);
        if (name != "baseline" && name != "static" && name != "dynamic" &&
            name != "oracle")
          throw ConfigError("config: unknown model '" + name + "'");
        e.models.push_back(name);
      }
      if (e.models.empty()) throw ConfigError("config: eval.models is empty");
    } else if (key == "baseline_window_days") {
      e.baseline_window_days = to_int(value, full);
    } else if (key == "window_start") {
      e.window_start = to_int(value, full);
    } else if (key == "window_end") {
      e.window_end = to_int(value, full);
    } else {
      throw ConfigError("config: unknown key '" + full + "'");
    }
    return;
  }
  if (section == "paths") {
    static const char* allowed[] = {"catalog",          "schema",
                                    "sales_train",      "sales_test",
                                    "ground_truth",     "static_checkpoint",
                                    "dynamic_checkpoint"};
    if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* a) {
          return key == a;
        }) == std::end(allowed))
      throw ConfigError("config: unknown key '" + full + "'");
    cfg.path_overrides[key] = value;
    return;
  }
  throw ConfigError("config: unknown section '" + section + "'");
}

RunConfig load_run_config(const std::string& path) {
  std::vector<std::string> lines;
  try {
    lines = read_lines(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  RunConfig cfg;
  std::string section;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(i + 1) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(i + 1) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(i + 1) +
                        ": empty key or value");
    apply_config_line(cfg, section, key, value);
  }
  return cfg;
}

}  // namespace stylerec
