// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tslcd/config.hpp"
#include "tslcd/raster.hpp"

namespace tslcd::pipeline {

enum class Stage { kSegment, kSample, kPretrain, kTrain, kInfer, kSmooth, kEval, kRunAll };

/// Throws InvalidArgument for an unknown name.
Stage parse_stage(const std::string& name);
std::string stage_name(Stage stage);

/// Where every stage reads and writes, relative to the configured output directory.
struct Layout {
  explicit Layout(const std::filesystem::path& root);

  std::filesystem::path root;
  std::filesystem::path config;
  std::filesystem::path manifest;
  std::filesystem::path scene_t0, scene_t1, scene_gt, scene_pseudo_mask;
  std::filesystem::path segmentation;
  std::filesystem::path pairs;
  std::filesystem::path extractor, pretrain_loss;
  std::filesystem::path model, train_loss, pseudo_labels, cva_map;
  std::filesystem::path predictions, raw_map;
  std::filesystem::path reliability, change_map;
  std::filesystem::path metrics;

  /// Artifacts whose bytes must be identical across runs with the same config.
  std::vector<std::filesystem::path> deterministic_artifacts() const;
};

struct Inputs {
  raster::BiTemporalPair raw;
  raster::BiTemporalPair normalized;
  std::optional<LabelMap> ground_truth;
};

/// Reads data.t0/data.t1 (and data.gt when set), or generates the synthetic scene and writes it
/// under scene/.
Inputs load_inputs(const config::PipelineConfig& cfg);

/// Runs one stage (or all of them for kRunAll), writing its artifacts and refreshing the
/// manifest. Throws PrerequisiteError naming the stage to run first.
void run_stage(Stage stage, const config::PipelineConfig& cfg);

/// Hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Rewrites manifest.txt with `<sha256>  <relative path>` for every existing deterministic
/// artifact.
void write_manifest(const Layout& layout);

}  // namespace tslcd::pipeline
