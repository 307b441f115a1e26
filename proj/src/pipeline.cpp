// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "tslcd/checkpoint.hpp"
#include "tslcd/metrics.hpp"
#include "tslcd/pseudo_label.hpp"
#include "tslcd/sampling.hpp"
#include "tslcd/segmentation.hpp"
#include "tslcd/smooth.hpp"
#include "tslcd/synthetic.hpp"
#include "tslcd/training.hpp"

namespace tslcd::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr Stage kOrder[] = {Stage::kSegment, Stage::kSample, Stage::kPretrain, Stage::kTrain,
                            Stage::kInfer,   Stage::kSmooth, Stage::kEval};

void require_artifact(const fs::path& path, Stage producer, Stage requester) {
  if (!fs::exists(path)) {
    throw PrerequisiteError("stage '" + stage_name(requester) + "' needs " + path.string() +
                            "; run stage '" + stage_name(producer) + "' first");
  }
}

training::TrainConfig pretrain_config(const config::PipelineConfig& cfg) {
  training::TrainConfig t;
  t.learning_rate = cfg.pretrain_lr;
  t.momentum = cfg.pretrain_momentum;
  t.batch_size = cfg.pretrain_batch;
  t.epochs = cfg.pretrain_epochs;
  t.seed = cfg.pretrain_seed();
  t.margin = cfg.loss_margin;
  t.gamma = cfg.loss_gamma;
  return t;
}

training::TrainConfig train_config(const config::PipelineConfig& cfg) {
  training::TrainConfig t;
  t.learning_rate = cfg.train_lr;
  t.momentum = cfg.train_momentum;
  t.batch_size = cfg.train_batch;
  t.epochs = cfg.train_epochs;
  t.seed = cfg.train_seed();
  t.margin = cfg.loss_margin;
  t.gamma = cfg.loss_gamma;
  t.detach_weight = cfg.loss_detach_weight;
  t.freeze_backbone = cfg.train_freeze_backbone;
  return t;
}

LabelMap cva_change_map(const raster::BiTemporalPair& normalized, int bins) {
  const RealMap magnitude = pseudo_label::cva_magnitude(normalized);
  const double threshold = pseudo_label::otsu_threshold(magnitude, bins);
  return pseudo_label::make_pseudo_labels(magnitude, threshold, 0.0);
}

void run_segment(const config::PipelineConfig& cfg, const Layout& layout) {
  const Inputs inputs = load_inputs(cfg);
  segmentation::KMeansOptions options;
  options.coord_weight = cfg.segmentation_coord_weight;
  options.max_iterations = cfg.segmentation_max_iter;
  const auto seg = segmentation::segment(inputs.normalized, cfg.segmentation_k,
                                         cfg.segmentation_seed(), options);
  spdlog::info("segmentation uses {} of {} classes", seg.distinct_labels(), seg.classes);
  raster::write_class_map(seg.labels, layout.segmentation);
}

void run_sample(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.segmentation, Stage::kSegment, Stage::kSample);
  const Inputs inputs = load_inputs(cfg);
  const segmentation::SegmentationMap seg{raster::read_class_map(layout.segmentation),
                                          cfg.segmentation_k};
  sampling::SamplingRequest request;
  request.patch_size = cfg.patch_size;
  request.purity = cfg.sampling_purity;
  request.similar = cfg.sampling_similar;
  request.dissimilar = cfg.sampling_dissimilar;
  request.seed = cfg.sampling_seed();
  sampling::save_dataset(sampling::sample_pairs(seg, inputs.normalized, request), layout.pairs);
}

void run_pretrain(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.pairs, Stage::kSample, Stage::kPretrain);
  const auto dataset = sampling::load_dataset(layout.pairs);
  network::Architecture arch;
  arch.bands = dataset.bands;
  arch.widths = cfg.network_widths;
  arch.hidden = cfg.network_hidden;
  auto result = training::pretrain_self(dataset, arch, pretrain_config(cfg));
  checkpoint::save_extractor(result.extractor, layout.extractor);
  result.report.checkpoint = layout.extractor;
  training::write_loss_csv(result.report, layout.pretrain_loss);
}

void run_train(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.extractor, Stage::kPretrain, Stage::kTrain);
  const Inputs inputs = load_inputs(cfg);
  const auto extractor = checkpoint::load_extractor(layout.extractor);
  const RealMap magnitude = pseudo_label::cva_magnitude(inputs.normalized);
  const double threshold = pseudo_label::otsu_threshold(magnitude, cfg.pseudo_bins);
  const LabelMap pseudo = pseudo_label::make_pseudo_labels(magnitude, threshold, cfg.pseudo_margin);
  spdlog::info("CVA Otsu threshold {:.6g}", threshold);
  raster::write_label_preview(pseudo, layout.pseudo_labels);
  raster::write_change_map(pseudo_label::make_pseudo_labels(magnitude, threshold, 0.0),
                           layout.cva_map);

  pseudo_label::TrainingSetOptions selection;
  selection.samples_per_class = cfg.train_samples_per_class;
  selection.balance = cfg.train_balance;
  selection.seed = cfg.selection_seed();
  auto result = training::train_cd(inputs.normalized, pseudo, extractor, cfg.patch_size,
                                   cfg.network_hidden, train_config(cfg), selection);
  checkpoint::save_model(result.model, layout.model);
  result.report.checkpoint = layout.model;
  training::write_loss_csv(result.report, layout.train_loss);
}

void run_infer(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.model, Stage::kTrain, Stage::kInfer);
  const Inputs inputs = load_inputs(cfg);
  const auto model = checkpoint::load_model(layout.model);
  smooth::PatchPredictionGrid grid{
      training::predict_dense(inputs.normalized, model, cfg.patch_size, cfg.infer_stride,
                              cfg.infer_batch),
      inputs.normalized.height(), inputs.normalized.width(), cfg.patch_size, cfg.infer_stride};
  raster::write_float_tiff(grid.predictions, layout.predictions);
  raster::write_change_map(smooth::raw_change_map(grid), layout.raw_map);
}

void run_smooth(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.predictions, Stage::kInfer, Stage::kSmooth);
  const Inputs inputs = load_inputs(cfg);
  const smooth::PatchPredictionGrid grid{raster::read_float_tiff(layout.predictions),
                                         inputs.raw.height(), inputs.raw.width(),
                                         cfg.patch_size, cfg.infer_stride};
  const auto field = smooth::accumulate(grid, cfg.smooth_sigma, cfg.smooth_soft);
  Grid<float> as_float(field.values.height(), field.values.width());
  for (std::size_t i = 0; i < as_float.size(); ++i) {
    as_float.values()[i] = static_cast<float>(field.values.values()[i]);
  }
  raster::write_float_tiff(as_float, layout.reliability);
  raster::write_change_map(smooth::threshold_reliability(field, cfg.smooth_tau), layout.change_map);
}

void run_eval(const config::PipelineConfig& cfg, const Layout& layout) {
  require_artifact(layout.raw_map, Stage::kInfer, Stage::kEval);
  require_artifact(layout.change_map, Stage::kSmooth, Stage::kEval);
  const Inputs inputs = load_inputs(cfg);
  if (!inputs.ground_truth) {
    throw InvalidArgument("stage 'eval' needs ground truth; set data.gt");
  }
  const LabelMap& gt = *inputs.ground_truth;
  std::vector<std::pair<std::string, std::string>> entries;
  auto add = [&](const LabelMap& map, const std::string& prefix) {
    const auto counts = metrics::confusion(map, gt);
    for (auto& e : metrics::report_entries(counts, prefix)) entries.push_back(std::move(e));
  };
  add(raster::read_change_map(layout.change_map), "smooth.");
  add(raster::read_change_map(layout.raw_map), "raw.");
  add(cva_change_map(inputs.normalized, cfg.pseudo_bins), "cva.");

  fs::create_directories(layout.metrics.parent_path());
  std::ofstream out(layout.metrics);
  if (!out) throw IoError("cannot write '" + layout.metrics.string() + "'");
  for (const auto& [key, value] : entries) {
    out << key << '=' << value << '\n';
    std::cout << key << '=' << value << '\n';
  }
}

}  // namespace

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::kSegment, Stage::kSample, Stage::kPretrain, Stage::kTrain, Stage::kInfer,
                  Stage::kSmooth, Stage::kEval, Stage::kRunAll}) {
    if (stage_name(s) == name) return s;
  }
  throw InvalidArgument("unknown stage '" + name +
                        "'; expected segment, sample, pretrain, train, infer, smooth, eval or "
                        "run-all");
}

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::kSegment: return "segment";
    case Stage::kSample: return "sample";
    case Stage::kPretrain: return "pretrain";
    case Stage::kTrain: return "train";
    case Stage::kInfer: return "infer";
    case Stage::kSmooth: return "smooth";
    case Stage::kEval: return "eval";
    case Stage::kRunAll: return "run-all";
  }
  return "?";
}

Layout::Layout(const fs::path& out)
    : root(out),
      config(out / "config.txt"),
      manifest(out / "manifest.txt"),
      scene_t0(out / "scene" / "t0.png"),
      scene_t1(out / "scene" / "t1.png"),
      scene_gt(out / "scene" / "gt.png"),
      scene_pseudo_mask(out / "scene" / "pseudo_change_mask.png"),
      segmentation(out / "segment" / "segmentation.png"),
      pairs(out / "sample" / "pairs.tslp"),
      extractor(out / "pretrain" / "extractor.tslw"),
      pretrain_loss(out / "pretrain" / "loss.csv"),
      model(out / "train" / "model.tslw"),
      train_loss(out / "train" / "loss.csv"),
      pseudo_labels(out / "train" / "pseudo_labels.png"),
      cva_map(out / "train" / "cva_change.png"),
      predictions(out / "infer" / "predictions.tiff"),
      raw_map(out / "infer" / "raw_change.png"),
      reliability(out / "smooth" / "reliability.tiff"),
      change_map(out / "smooth" / "change_map.png"),
      metrics(out / "eval" / "metrics.txt") {}

std::vector<fs::path> Layout::deterministic_artifacts() const {
  return {scene_t0,    scene_t1,    scene_gt,    scene_pseudo_mask, segmentation, pairs,
          extractor,   model,       pseudo_labels, cva_map,         predictions,  raw_map,
          reliability, change_map,  metrics};
}

Inputs load_inputs(const config::PipelineConfig& cfg) {
  Inputs inputs;
  if (!cfg.data_t0.empty()) {
    inputs.raw = raster::load_pair(cfg.data_t0, cfg.data_t1);
    if (!cfg.data_gt.empty()) {
      inputs.ground_truth = raster::read_change_map(cfg.data_gt);
      if (!inputs.ground_truth->same_extent(inputs.raw.t0)) {
        throw InvalidArgument("ground truth " + inputs.ground_truth->shape_string() +
                              " does not match the image pair " + inputs.raw.t0.shape_string());
      }
    }
  } else {
    synthetic::SceneOptions options;
    options.seed = cfg.synthetic_seed;
    options.size = cfg.synthetic_size;
    options.change_fraction = cfg.synthetic_change_fraction;
    options.pseudo_changes = cfg.synthetic_pseudo_changes;
    options.noise = cfg.synthetic_noise;
    options.shadow_depth = cfg.synthetic_shadow_depth;
    auto scene = synthetic::generate_synthetic(options);
    const Layout layout(cfg.out);
    raster::write_image(scene.pair.t0, layout.scene_t0);
    raster::write_image(scene.pair.t1, layout.scene_t1);
    raster::write_change_map(scene.ground_truth, layout.scene_gt);
    raster::write_change_map(scene.pseudo_change_mask, layout.scene_pseudo_mask);
    inputs.raw = std::move(scene.pair);
    inputs.ground_truth = std::move(scene.ground_truth);
  }
  inputs.raw.validate(cfg.patch_size);
  inputs.normalized = raster::normalize(inputs.raw);
  return inputs;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

void write_manifest(const Layout& layout) {
  fs::create_directories(layout.root);
  std::ofstream out(layout.manifest);
  if (!out) throw IoError("cannot write '" + layout.manifest.string() + "'");
  for (const auto& path : layout.deterministic_artifacts()) {
    if (fs::exists(path)) {
      out << sha256_file(path) << "  " << fs::relative(path, layout.root).generic_string() << '\n';
    }
  }
}

void run_stage(Stage stage, const config::PipelineConfig& cfg) {
  cfg.validate();
  const Layout layout(cfg.out);
  fs::create_directories(layout.root);
  config::save(cfg, layout.config);
  if (stage == Stage::kRunAll) {
    for (Stage s : kOrder) run_stage(s, cfg);
    return;
  }
  const auto start = std::chrono::steady_clock::now();
  spdlog::info("stage {} started", stage_name(stage));
  switch (stage) {
    case Stage::kSegment: run_segment(cfg, layout); break;
    case Stage::kSample: run_sample(cfg, layout); break;
    case Stage::kPretrain: run_pretrain(cfg, layout); break;
    case Stage::kTrain: run_train(cfg, layout); break;
    case Stage::kInfer: run_infer(cfg, layout); break;
    case Stage::kSmooth: run_smooth(cfg, layout); break;
    case Stage::kEval: run_eval(cfg, layout); break;
    case Stage::kRunAll: break;
  }
  write_manifest(layout);
  spdlog::info("stage {} finished in {:.1f} s", stage_name(stage),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace tslcd::pipeline
