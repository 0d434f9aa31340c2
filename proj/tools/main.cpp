// SPDX-License-Identifier: Apache-2.0
//
// stylerec command line: generate a synthetic market, train the static and
// dynamic recommenders, run the backtest and print the comparison report.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stylerec/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path,
                              "run configuration file (INI)");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "seed override (takes precedence)");
}

stylerec::RunConfig load(const CommonArgs& args) {
  stylerec::RunConfig cfg;
  if (!args.config_path.empty())
    cfg = stylerec::load_run_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylerec: sequential fashion-recommendation testbed"};
  app.require_subcommand(1);

  CommonArgs gen_args, ts_args, td_args, eval_args, report_args;
  auto* gen = app.add_subcommand("gen", "generate the synthetic market files");
  add_common(gen, gen_args, true);
  auto* ts = app.add_subcommand("train-static",
                                "train the content-embedding factorization");
  add_common(ts, ts_args, true);
  auto* td = app.add_subcommand("train-dynamic",
                                "train the LSTM sequence model");
  add_common(td, td_args, true);
  auto* ev = app.add_subcommand("eval", "run the backtest for the configured models");
  add_common(ev, eval_args, true);
  auto* rep = app.add_subcommand("report", "format the metrics table");
  add_common(rep, report_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      stylerec::run_gen(load(gen_args), gen_args.out_dir, &std::cerr);
    } else if (ts->parsed()) {
      stylerec::run_train_static(load(ts_args), ts_args.out_dir, &std::cerr);
    } else if (td->parsed()) {
      stylerec::run_train_dynamic(load(td_args), td_args.out_dir, &std::cerr);
    } else if (ev->parsed()) {
      stylerec::run_eval(load(eval_args), eval_args.out_dir, &std::cerr);
    } else if (rep->parsed()) {
      std::cout << stylerec::run_report(load(report_args), report_args.out_dir);
    }
  } catch (const stylerec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stylerec::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 3;
  } catch (const stylerec::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const stylerec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
