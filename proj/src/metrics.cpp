// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/metrics.hpp"

#include <cstdio>

#include <spdlog/spdlog.h>

namespace tslcd::metrics {

namespace {

void require_total(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidArgument("metrics need at least one evaluated pixel");
}

double ratio(std::uint64_t num, std::uint64_t den, const char* what) {
  if (den == 0) throw InvalidArgument(std::string(what) + " rate has a zero denominator");
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt) {
  if (!pred.same_shape(gt)) {
    throw InvalidArgument("prediction " + pred.shape_string() + " and ground truth " +
                          gt.shape_string() + " differ in shape");
  }
  ConfusionCounts c;
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > kChanged) throw InvalidArgument("prediction map is not binary");
    if (g[i] == kUnknown) {
      ++c.excluded;
      continue;
    }
    if (g[i] > kChanged) throw InvalidArgument("ground truth holds an invalid label");
    if (p[i] == kChanged) {
      ++(g[i] == kChanged ? c.tp : c.fp);
    } else {
      ++(g[i] == kChanged ? c.fn : c.tn);
    }
  }
  if (c.excluded > 0) {
    spdlog::info("excluded {} unknown ground-truth pixels from evaluation", c.excluded);
  }
  return c;
}

double overall_error(const ConfusionCounts& c) {
  require_total(c);
  return ratio(c.fp + c.fn, c.total(), "overall error");
}

CountAndRate missed_detection(const ConfusionCounts& c) {
  return {c.fn, ratio(c.fn, c.fn + c.tp, "missed detection")};
}

CountAndRate false_alarm(const ConfusionCounts& c) {
  return {c.fp, ratio(c.fp, c.fp + c.tn, "false alarm")};
}

double kappa(const ConfusionCounts& c) {
  require_total(c);
  // kappa = (N (tp + tn) - A) / (N^2 - A) with A = N^2 p_e, in exact integer arithmetic.
  using Wide = __int128;
  const Wide total = c.total();
  const Wide chance = Wide(c.tp + c.fp) * Wide(c.tp + c.fn) + Wide(c.fn + c.tn) * Wide(c.fp + c.tn);
  const Wide numerator = total * Wide(c.tp + c.tn) - chance;
  const Wide denominator = total * total - chance;
  if (denominator == 0) {
    spdlog::warn("kappa is degenerate: chance agreement is 1 (single class in both maps)");
    return c.fp + c.fn == 0 ? 1.0 : 0.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::vector<std::pair<std::string, std::string>> report_entries(const ConfusionCounts& c,
                                                                const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](const std::string& key, std::string value) {
    out.emplace_back(prefix + key, std::move(value));
  };
  add("tp", std::to_string(c.tp));
  add("tn", std::to_string(c.tn));
  add("fp", std::to_string(c.fp));
  add("fn", std::to_string(c.fn));
  add("excluded", std::to_string(c.excluded));
  add("oe", format_real(overall_error(c)));
  add("kappa", format_real(kappa(c)));
  add("md_count", std::to_string(c.fn));
  add("md_rate", c.fn + c.tp > 0 ? format_real(missed_detection(c).rate) : "nan");
  add("fa_count", std::to_string(c.fp));
  add("fa_rate", c.fp + c.tn > 0 ? format_real(false_alarm(c).rate) : "nan");
  return out;
}

}  // namespace tslcd::metrics
