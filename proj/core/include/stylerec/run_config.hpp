// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylerec/dynamic_model.hpp"
#include "stylerec/static_model.hpp"
#include "stylerec/synthgen.hpp"

namespace stylerec {

struct EvalConfig {
  std::vector<std::string> models = {"baseline", "static", "dynamic", "oracle"};
  std::optional<Minutes> window_start;  // default: the generator's test window
  std::optional<Minutes> window_end;
  Minutes baseline_window_days = 7;
};

/// Parsed run configuration: one sectioned key-value file drives every
/// command so a pipeline is reproducible from a single input.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  GenConfig gen;
  StaticTrainConfig static_cfg;
  TrainConfigDyn dyn_cfg;
  EvalConfig eval;
  std::map<std::string, std::string> path_overrides;  // [paths] section

  /// Throws ConfigError when no seed is configured.
  std::uint64_t require_seed() const;
};

/// Strict INI-style parser: unknown sections or keys are configuration
/// errors, values must parse as their target type.
RunConfig load_run_config(const std::string& path);

/// Applies `key = value` assignments (same keys as the file) onto a config.
void apply_config_line(RunConfig& cfg, const std::string& section,
                       const std::string& key, const std::string& value);

LossKind parse_loss_kind(const std::string& s);
const char* loss_kind_name(LossKind kind);
TimeEncoding parse_time_encoding(const std::string& s);
const char* time_encoding_name(TimeEncoding enc);

}  // namespace stylerec
