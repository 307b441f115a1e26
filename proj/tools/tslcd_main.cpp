// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

// tslcd <stage> [--config <path>] [--out <dir>] [--seed <int>] [key=value ...]
//
// Exit status: 0 success, 1 user error (bad input or a missing prerequisite),
// 2 internal error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tslcd/config.hpp"
#include "tslcd/error.hpp"
#include "tslcd/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised bi-temporal change detection"};
  std::string stage;
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  std::vector<std::string> overrides;
  bool quiet = false;
  app.add_option("stage", stage,
                 "segment | sample | pretrain | train | infer | smooth | eval | run-all")
      ->required();
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides `out`)");
  app.add_option("--seed", seed, "global seed (overrides `seed`)")->check(CLI::NonNegativeNumber);
  app.add_option("overrides", overrides, "key=value overrides, applied last");
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  // Precedence, lowest to highest: defaults, config file, --out/--seed, trailing key=value.
  try {
    tslcd::config::PipelineConfig cfg;
    if (!config_path.empty()) cfg = tslcd::config::load(config_path);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw tslcd::InvalidArgument("override '" + item + "' is not key=value");
      }
      cfg.set(item.substr(0, eq), item.substr(eq + 1));
    }
    cfg.validate();
    tslcd::pipeline::run_stage(tslcd::pipeline::parse_stage(stage), cfg);
  } catch (const tslcd::InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return 2;
  }
  return 0;
}
