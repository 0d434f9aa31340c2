// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>

#include "stylerec/run_config.hpp"

namespace stylerec {

/// Fixed artifact names under the output directory. Inputs may be redirected
/// through the [paths] config section; outputs always use these names.
struct OutPaths {
  std::string dir;
  const std::map<std::string, std::string>* overrides = nullptr;

  std::string in(const std::string& key, const std::string& fallback) const;
  std::string catalog() const { return in("catalog", "catalog.tsv"); }
  std::string schema() const { return in("schema", "schema.tsv"); }
  std::string sales_train() const { return in("sales_train", "sales_train.tsv"); }
  std::string sales_test() const { return in("sales_test", "sales_test.tsv"); }
  std::string ground_truth() const {
    return in("ground_truth", "ground_truth.tsv");
  }
  std::string static_checkpoint() const {
    return in("static_checkpoint", "static_checkpoint.bin");
  }
  std::string dynamic_checkpoint() const {
    return in("dynamic_checkpoint", "dynamic_checkpoint.bin");
  }
  std::string static_loss_log() const { return dir + "/static_loss_log.tsv"; }
  std::string dynamic_loss_log() const { return dir + "/dynamic_loss_log.tsv"; }
  std::string roc(const std::string& model) const {
    return dir + "/roc_" + model + ".tsv";
  }
  std::string metrics() const { return dir + "/metrics.tsv"; }
  std::string report() const { return dir + "/report.txt"; }
};

OutPaths make_paths(const RunConfig& cfg, const std::string& out_dir);

/// Stage seeds are derived from the run seed so the stages stay independent.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage);

// Command cores. They throw stylerec errors; the CLI maps them to exit codes.
void run_gen(const RunConfig& cfg, const std::string& out_dir,
             std::ostream* log = nullptr);
void run_train_static(const RunConfig& cfg, const std::string& out_dir,
                      std::ostream* log = nullptr);
void run_train_dynamic(const RunConfig& cfg, const std::string& out_dir,
                       std::ostream* log = nullptr);
void run_eval(const RunConfig& cfg, const std::string& out_dir,
              std::ostream* log = nullptr);
/// Formats the metrics table; also written to report.txt.
std::string run_report(const RunConfig& cfg, const std::string& out_dir);

}  // namespace stylerec
