// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tslcd::config {

/// Every tunable of the pipeline. Defaults: n = 7, k = 32, gamma = 15; the remaining values are
/// this project's choices (see README).
struct PipelineConfig {
  std::uint64_t seed = 42;
  std::string out = "tslcd_out";

  // Inputs. Empty t0/t1 paths select the synthetic scene.
  std::string data_t0;
  std::string data_t1;
  std::string data_gt;

  std::uint64_t synthetic_seed = 1;
  int synthetic_size = 256;
  double synthetic_change_fraction = 0.05;
  std::vector<std::string> synthetic_pseudo_changes{"tint", "shadow", "noise"};
  double synthetic_noise = 0.06;
  double synthetic_shadow_depth = 0.25;

  int patch_size = 7;

  int segmentation_k = 32;
  double segmentation_coord_weight = 0.1;
  int segmentation_max_iter = 50;

  double sampling_purity = 0.7;
  int sampling_similar = 4000;
  int sampling_dissimilar = 4000;

  std::vector<int> network_widths{16, 32, 64, 64};
  int network_hidden = 128;

  double loss_margin = 1.0;
  double loss_gamma = 15.0;
  bool loss_detach_weight = false;

  double pretrain_lr = 1e-3;
  double pretrain_momentum = 0.9;
  int pretrain_batch = 64;
  int pretrain_epochs = 20;

  double train_lr = 30.0;
  double train_momentum = 0.9;
  int train_batch = 64;
  int train_epochs = 20;
  bool train_freeze_backbone = false;
  int train_samples_per_class = 3000;
  bool train_balance = true;

  double pseudo_margin = 0.1;
  int pseudo_bins = 256;

  int infer_stride = 1;
  int infer_batch = 256;

  double smooth_sigma = 1.75;
  double smooth_tau = 0.0;
  bool smooth_soft = false;

  /// Sets one dotted key from its text form. Throws InvalidArgument for unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Range and consistency checks across keys.
  void validate() const;

  /// One `key=value` line per key, in a fixed order.
  std::string to_text() const;

  // Per-stage seeds derived from `seed`.
  std::uint64_t segmentation_seed() const { return seed; }
  std::uint64_t sampling_seed() const { return seed + 1; }
  std::uint64_t pretrain_seed() const { return seed + 2; }
  std::uint64_t train_seed() const { return seed + 3; }
  std::uint64_t selection_seed() const { return seed + 4; }
};

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies every entry of `text` over the defaults, then validates.
PipelineConfig from_text(const std::string& text);
PipelineConfig load(const std::filesystem::path& path);
void save(const PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace tslcd::config
