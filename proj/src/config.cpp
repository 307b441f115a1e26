// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "tslcd/error.hpp"

namespace tslcd::config {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw InvalidArgument("config key '" + key + "' expects " + kind + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end) {
    bad_value(key, value, std::is_integral_v<T> ? "an integer" : "a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Field {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field number(std::string key, T PipelineConfig::*member) {
  return {std::move(key),
          [member](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const PipelineConfig& c) { return format_number(c.*member); }};
}

Field boolean(std::string key, bool PipelineConfig::*member) {
  return {std::move(key),
          [member](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_bool(k, v);
          },
          [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field text(std::string key, std::string PipelineConfig::*member) {
  return {std::move(key),
          [member](PipelineConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number("seed", &PipelineConfig::seed),
      text("out", &PipelineConfig::out),
      text("data.t0", &PipelineConfig::data_t0),
      text("data.t1", &PipelineConfig::data_t1),
      text("data.gt", &PipelineConfig::data_gt),
      number("synthetic.seed", &PipelineConfig::synthetic_seed),
      number("synthetic.size", &PipelineConfig::synthetic_size),
      number("synthetic.change_fraction", &PipelineConfig::synthetic_change_fraction),
      {"synthetic.pseudo_changes",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.synthetic_pseudo_changes = split_list(v);
       },
       [](const PipelineConfig& c) { return join(c.synthetic_pseudo_changes); }},
      number("synthetic.noise", &PipelineConfig::synthetic_noise),
      number("synthetic.shadow_depth", &PipelineConfig::synthetic_shadow_depth),
      number("patch.size", &PipelineConfig::patch_size),
      number("segmentation.k", &PipelineConfig::segmentation_k),
      number("segmentation.coord_weight", &PipelineConfig::segmentation_coord_weight),
      number("segmentation.max_iter", &PipelineConfig::segmentation_max_iter),
      number("sampling.purity", &PipelineConfig::sampling_purity),
      number("sampling.m_s", &PipelineConfig::sampling_similar),
      number("sampling.m_d", &PipelineConfig::sampling_dissimilar),
      {"network.widths",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         std::vector<int> widths;
         for (const auto& item : split_list(v)) widths.push_back(parse_number<int>(k, item));
         c.network_widths = widths;
       },
       [](const PipelineConfig& c) {
         std::vector<std::string> items;
         for (int w : c.network_widths) items.push_back(std::to_string(w));
         return join(items);
       }},
      number("network.hidden", &PipelineConfig::network_hidden),
      number("loss.margin", &PipelineConfig::loss_margin),
      number("loss.gamma", &PipelineConfig::loss_gamma),
      boolean("loss.detach_weight", &PipelineConfig::loss_detach_weight),
      number("pretrain.lr", &PipelineConfig::pretrain_lr),
      number("pretrain.momentum", &PipelineConfig::pretrain_momentum),
      number("pretrain.batch", &PipelineConfig::pretrain_batch),
      number("pretrain.epochs", &PipelineConfig::pretrain_epochs),
      number("train.lr", &PipelineConfig::train_lr),
      number("train.momentum", &PipelineConfig::train_momentum),
      number("train.batch", &PipelineConfig::train_batch),
      number("train.epochs", &PipelineConfig::train_epochs),
      boolean("train.freeze_backbone", &PipelineConfig::train_freeze_backbone),
      number("train.samples_per_class", &PipelineConfig::train_samples_per_class),
      boolean("train.balance", &PipelineConfig::train_balance),
      number("pseudo.margin", &PipelineConfig::pseudo_margin),
      number("pseudo.bins", &PipelineConfig::pseudo_bins),
      number("infer.stride", &PipelineConfig::infer_stride),
      number("infer.batch", &PipelineConfig::infer_batch),
      number("smooth.sigma", &PipelineConfig::smooth_sigma),
      number("smooth.tau", &PipelineConfig::smooth_tau),
      boolean("smooth.soft", &PipelineConfig::smooth_soft),
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw InvalidArgument("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument("invalid config: " + message);
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, trim(value));
}

std::string PipelineConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void PipelineConfig::validate() const {
  require(!out.empty(), "out must name a directory");
  require(data_t0.empty() == data_t1.empty(), "data.t0 and data.t1 must be set together");
  require(synthetic_size >= 16, "synthetic.size must be at least 16");
  require(synthetic_change_fraction > 0.0 && synthetic_change_fraction <= 0.3,
          "synthetic.change_fraction must lie in (0, 0.3]");
  for (const auto& kind : synthetic_pseudo_changes) {
    require(kind == "tint" || kind == "shadow" || kind == "noise",
            "synthetic.pseudo_changes accepts tint, shadow and noise, got '" + kind + "'");
  }
  require(synthetic_noise >= 0.0, "synthetic.noise must be non-negative");
  require(synthetic_shadow_depth >= 0.0 && synthetic_shadow_depth < 1.0, "synthetic.shadow_depth must lie in [0, 1)");
  require(patch_size >= 1 && patch_size % 2 == 1, "patch.size must be a positive odd number");
  require(segmentation_k >= 1 && segmentation_k <= 256,
          "segmentation.k must lie in [1, 256] (the class map is stored as 8-bit)");
  require(segmentation_max_iter >= 1, "segmentation.max_iter must be positive");
  require(segmentation_coord_weight >= 0.0, "segmentation.coord_weight must be non-negative");
  require(sampling_purity > 0.0 && sampling_purity <= 1.0, "sampling.purity must lie in (0, 1]");
  require(sampling_similar > 0 && sampling_dissimilar > 0, "sampling.m_s and m_d must be positive");
  require(std::max(sampling_similar, sampling_dissimilar) <=
              2 * std::min(sampling_similar, sampling_dissimilar),
          "sampling.m_s and sampling.m_d must stay within a factor of 2");
  require(!network_widths.empty(), "network.widths needs at least one layer");
  for (int w : network_widths) require(w >= 1, "network.widths entries must be positive");
  require(network_hidden >= 1, "network.hidden must be positive");
  require(loss_margin > 0.0, "loss.margin must be positive");
  require(loss_gamma >= 0.0, "loss.gamma must be non-negative");
  require(pretrain_lr >= 0.0 && train_lr >= 0.0, "learning rates must be non-negative");
  require(pretrain_momentum >= 0.0 && pretrain_momentum < 1.0 && train_momentum >= 0.0 &&
              train_momentum < 1.0,
          "momentum must lie in [0, 1)");
  require(pretrain_batch >= 1 && train_batch >= 1 && infer_batch >= 1,
          "batch sizes must be positive");
  require(pretrain_epochs >= 1 && train_epochs >= 1, "epochs must be positive");
  require(train_samples_per_class >= 1, "train.samples_per_class must be positive");
  require(pseudo_margin >= 0.0 && pseudo_margin < 0.5, "pseudo.margin must lie in [0, 0.5)");
  require(pseudo_bins >= 2, "pseudo.bins must be at least 2");
  require(infer_stride >= 1 && infer_stride <= patch_size,
          "infer.stride must lie in [1, patch.size] so every pixel is covered");
  require(smooth_sigma > 0.0, "smooth.sigma must be positive");
}

std::string PipelineConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(number) + " lacks '=': " + line);
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(number) + " has no key");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

PipelineConfig from_text(const std::string& text) {
  PipelineConfig cfg;
  for (const auto& [key, value] : parse_key_values(text)) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

PipelineConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

void save(const PipelineConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config '" + path.string() + "'");
  out << cfg.to_text();
}

}  // namespace tslcd::config
