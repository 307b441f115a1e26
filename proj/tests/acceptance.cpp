// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tslcd/checkpoint.hpp"
#include "tslcd/config.hpp"
#include "tslcd/losses.hpp"
#include "tslcd/metrics.hpp"
#include "tslcd/network.hpp"
#include "tslcd/pipeline.hpp"
#include "tslcd/raster.hpp"
#include "tslcd/sampling.hpp"
#include "tslcd/smooth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tslcd;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> read_metrics(const fs::path& path) {
  return config::parse_key_values(read_file(path));
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command =
      std::string(TSLCD_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> loss_column(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    out.push_back(std::strtod(line.substr(first + 1, second - first - 1).c_str(), nullptr));
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// 1. Mining loss with gamma = 0 reduces to binary cross-entropy.
Outcome loss_reduction() {
  double worst = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    for (std::uint8_t y : {0, 1}) {
      const double bce = y == 1 ? -std::log(p) : -std::log(1.0 - p);
      worst = std::max(worst, std::abs(losses::hard_mining_loss({{p}, {y}, 0.0}) - bce));
    }
  }
  return {worst < 1e-9, format("max |L(gamma=0) - BCE| = %.3g over 198 points (tol 1e-9)", worst)};
}

// 2. Analytic gradients against central differences.
Outcome gradient_fidelity() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> distance(0.0, 2.5);
  std::uniform_real_distribution<double> prediction(0.01, 0.99);
  std::uniform_real_distribution<double> gamma(0.0, 15.0);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::bernoulli_distribution coin(0.5);
  const double h = 1e-6;
  double worst_c = 0.0, worst_m = 0.0, worst_h = 0.0;

  for (int trial = 0; trial < 200; ++trial) {
    losses::ContrastiveBatch c;
    for (int i = 0; i < 4; ++i) {
      double d = distance(rng);
      while (std::abs(d - c.margin) < 1e-3) d = distance(rng);  // skip the hinge kink
      c.distances.push_back(d);
      c.labels.push_back(coin(rng));
    }
    const auto gc = losses::contrastive_grad(c);
    for (int i = 0; i < 4; ++i) {
      auto plus = c, minus = c;
      plus.distances[i] += h;
      minus.distances[i] -= h;
      const double fd = (losses::contrastive_loss(plus) - losses::contrastive_loss(minus)) / (2 * h);
      worst_c = std::max(worst_c, relative_error(gc[i], fd));
    }

    losses::MiningBatch m;
    m.gamma = gamma(rng);
    for (int i = 0; i < 4; ++i) {
      m.predictions.push_back(prediction(rng));
      m.labels.push_back(coin(rng));
    }
    const auto gm = losses::hard_mining_grad(m);
    for (int i = 0; i < 4; ++i) {
      auto plus = m, minus = m;
      plus.predictions[i] += h;
      minus.predictions[i] -= h;
      const double fd = (losses::hard_mining_loss(plus) - losses::hard_mining_loss(minus)) / (2 * h);
      worst_m = std::max(worst_m, relative_error(gm[i], fd));
    }

    auto head = network::cast<double>(network::init_params({3, {8}, 6}, trial).head);
    network::Vector<double> f0(8), f1(8);
    for (int i = 0; i < 8; ++i) {
      f0(i) = std::abs(normal(rng));
      f1(i) = std::abs(normal(rng));
    }
    auto grad = network::predict_change_gradient(head, f0, f1);
    auto grad_views = network::tensors(grad);
    auto views = network::tensors(head);
    double num = 0.0, den_a = 0.0, den_n = 0.0;
    for (std::size_t t = 0; t < views.size(); ++t) {
      for (std::size_t i = 0; i < views[t].size(); ++i) {
        double& w = views[t][i];
        const double saved = w;
        w = saved + h;
        const double up = network::predict_change(head, f0, f1);
        w = saved - h;
        const double down = network::predict_change(head, f0, f1);
        w = saved;
        const double fd = (up - down) / (2 * h);
        num += std::pow(grad_views[t][i] - fd, 2);
        den_a += grad_views[t][i] * grad_views[t][i];
        den_n += fd * fd;
      }
    }
    worst_h = std::max(worst_h, std::sqrt(num) / std::max(std::sqrt(std::max(den_a, den_n)), 1e-12));
  }
  const bool pass = worst_c < 1e-4 && worst_m < 1e-4 && worst_h < 1e-4;
  return {pass, format("max relative error: contrastive %.2e, mining %.2e, head %.2e over 200 "
                       "inputs (tol 1e-4)",
                       worst_c, worst_m, worst_h)};
}

// 3. Reliable centers against exhaustive window enumeration.
Outcome sampler_oracle() {
  constexpr int kSize = 64, kClasses = 5, n = 7;
  constexpr double p = 0.7;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, kClasses - 1);
  // Random 5-class map: nearest of 40 random sites, then 5% salt noise.
  std::vector<std::pair<double, double>> sites(40);
  std::vector<int> site_class(40);
  for (int i = 0; i < 40; ++i) {
    sites[i] = {unit(rng) * kSize, unit(rng) * kSize};
    site_class[i] = cls(rng);
  }
  segmentation::SegmentationMap seg{ClassMap(kSize, kSize), kClasses};
  for (int r = 0; r < kSize; ++r)
    for (int c = 0; c < kSize; ++c) {
      int best = 0;
      double best_d = 1e300;
      for (int i = 0; i < 40; ++i) {
        const double d = std::pow(r - sites[i].first, 2) + std::pow(c - sites[i].second, 2);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      seg.labels.at(r, c) = unit(rng) < 0.05 ? cls(rng) : site_class[best];
    }

  std::set<std::pair<int, int>> got;
  for (const auto& center : sampling::reliable_centers(seg, n, p)) got.insert({center.row, center.col});
  std::set<std::pair<int, int>> expected;
  const int r0 = (n - 1) / 2;
  for (int r = 0; r < kSize; ++r)
    for (int c = 0; c < kSize; ++c) {
      int same = 0;
      for (int dy = -r0; dy <= r0; ++dy)
        for (int dx = -r0; dx <= r0; ++dx)
          same += seg.labels.at(raster::reflect_index(r + dy, kSize),
                                raster::reflect_index(c + dx, kSize)) == seg.labels.at(r, c);
      if (static_cast<double>(same) / (n * n) >= p) expected.insert({r, c});
    }
  return {got == expected && !expected.empty(),
          format("%zu reliable centers, oracle %zu, sets %s", got.size(), expected.size(),
                 got == expected ? "equal" : "differ")};
}

// 4. Reliability accumulation against a brute-force loop, and isolated-flip correction.
Outcome smooth_oracle() {
  constexpr int kSize = 32, n = 7;
  constexpr double sigma = 1.75;
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  smooth::PatchPredictionGrid preds{Grid<float>(kSize, kSize), kSize, kSize, n, 1};
  for (float& v : preds.predictions.values()) v = coin(rng) ? 1.0f : 0.0f;
  const auto field = smooth::accumulate(preds, sigma);
  double worst = 0.0;
  for (int r = 0; r < kSize; ++r)
    for (int c = 0; c < kSize; ++c) {
      double v = 0.0;
      for (int pr = 0; pr < kSize; ++pr)
        for (int pc = 0; pc < kSize; ++pc) {
          if (std::abs(pr - r) > n / 2 || std::abs(pc - c) > n / 2) continue;
          const double d = std::hypot(pr - r, pc - c);
          const double vote = preds.predictions.at(pr, pc) >= 0.5f ? 1.0 : -1.0;
          v += vote * std::exp(-d * d / (sigma * sigma)) / (2.0 * M_PI * sigma);
        }
      worst = std::max(worst, std::abs(field.values.at(r, c) - v));
    }

  int flips = 0, corrected = 0;
  for (float background : {0.0f, 1.0f}) {
    for (int r = 0; r < kSize; ++r)
      for (int c = 0; c < kSize; ++c) {
        smooth::PatchPredictionGrid flip{Grid<float>(kSize, kSize, 1, background), kSize, kSize, n, 1};
        flip.predictions.at(r, c) = 1.0f - background;
        const LabelMap out = smooth::threshold_reliability(smooth::accumulate(flip, sigma), 0.0);
        const std::uint8_t want = background > 0.5f ? kChanged : kUnchanged;
        bool ok = true;
        for (std::uint8_t v : out.values()) ok = ok && v == want;
        ++flips;
        corrected += ok ? 1 : 0;
      }
  }
  return {worst < 1e-9 && corrected == flips,
          format("max |accumulate - brute force| = %.2e (tol 1e-9); %d/%d isolated flips corrected",
                 worst, corrected, flips)};
}

// 5. Metrics hand check.
Outcome metrics_hand_check() {
  const double k = metrics::kappa({40, 40, 10, 10, 0});
  LabelMap gt(8, 8);
  for (int i = 0; i < 20; ++i) gt.values()[i] = kChanged;
  const auto perfect = metrics::confusion(gt, gt);
  const double oe = metrics::overall_error(perfect);
  const double kp = metrics::kappa(perfect);
  return {k == 0.6 && oe == 0.0 && kp == 1.0,
          format("Kappa(40,40,10,10) = %.17g (%s 0.6); perfect OE = %g, Kappa = %g", k,
                 k == 0.6 ? "==" : "!=", oe, kp)};
}

struct EndToEnd {
  fs::path first;
  fs::path second;
  bool first_ok = false;
  double first_seconds = 0.0;
};

// 6. Default configuration on the 256x256 synthetic scene, driven through the CLI.
Outcome end_to_end(EndToEnd& state) {
  fs::remove_all(state.first);
  const auto start = std::chrono::steady_clock::now();
  const int code = run_cli("run-all -q --out '" + state.first.string() + "'",
                           state.first.string() + ".log");
  state.first_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (code != 0) return {false, format("run-all exited with %d; see %s.log", code, state.first.c_str())};
  state.first_ok = true;
  const pipeline::Layout layout(state.first);
  const auto m = read_metrics(layout.metrics);
  const double smooth_kappa = std::stod(m.at("smooth.kappa"));
  const double cva_kappa = std::stod(m.at("cva.kappa"));
  const long smooth_fa = std::stol(m.at("smooth.fa_count"));
  const long raw_fa = std::stol(m.at("raw.fa_count"));
  bool finite = true;
  std::size_t epochs = 0;
  for (const auto& csv : {layout.pretrain_loss, layout.train_loss}) {
    for (double v : loss_column(csv)) {
      finite = finite && std::isfinite(v);
      ++epochs;
    }
  }
  const bool a = smooth_kappa >= cva_kappa;
  const bool b = smooth_fa <= raw_fa;
  const bool c = finite && epochs > 0;
  return {a && b && c,
          format("(a) smooth Kappa %.4f vs CVA %.4f: %s; (b) FA smooth %ld vs raw %ld: %s; "
                 "(c) %zu loss entries finite: %s",
                 smooth_kappa, cva_kappa, a ? "ok" : "FAIL", smooth_fa, raw_fa, b ? "ok" : "FAIL",
                 epochs, c ? "ok" : "FAIL")};
}

// 7. A second identical run must reproduce the first bit for bit.
Outcome determinism(const EndToEnd& state) {
  if (!state.first_ok) return {false, "the first run (criterion 6) did not complete"};
  fs::remove_all(state.second);
  const int code = run_cli("run-all -q --out '" + state.second.string() + "'",
                           state.second.string() + ".log");
  if (code != 0) return {false, format("second run-all exited with %d", code)};
  const pipeline::Layout a(state.first), b(state.second);
  int compared = 0, identical = 0;
  std::string first_difference;
  for (const auto& path : a.deterministic_artifacts()) {
    const fs::path rel = fs::relative(path, a.root);
    ++compared;
    if (read_file(path) == read_file(b.root / rel)) {
      ++identical;
    } else if (first_difference.empty()) {
      first_difference = rel.string();
    }
  }
  const bool maps = read_file(a.change_map) == read_file(b.change_map) &&
                    read_file(a.raw_map) == read_file(b.raw_map);
  const bool report = read_file(a.metrics) == read_file(b.metrics);
  return {maps && report && identical == compared,
          format("change maps %s, metric reports %s, %d/%d artifacts byte-identical%s%s",
                 maps ? "identical" : "DIFFER", report ? "identical" : "DIFFER", identical,
                 compared, first_difference.empty() ? "" : "; first difference: ",
                 first_difference.c_str())};
}

// 8. Pretrained versus random extractor, five change-detection epochs each.
Outcome pretraining_utility(const EndToEnd& state, const fs::path& work) {
  if (!state.first_ok) return {false, "the default run (criterion 6) did not complete"};
  const config::PipelineConfig cfg = config::load(pipeline::Layout(state.first).config);
  std::vector<double> final_loss;
  for (const char* variant : {"pretrained", "random"}) {
    const fs::path dir = work / (std::string("utility_") + variant);
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const char* sub : {"scene", "segment", "sample", "pretrain"}) {
      fs::copy(state.first / sub, dir / sub, fs::copy_options::recursive);
    }
    const pipeline::Layout layout(dir);
    if (std::string(variant) == "random") {
      // The same initialization pretraining started from, without the pretraining.
      network::Architecture arch{3, cfg.network_widths, cfg.network_hidden};
      checkpoint::save_extractor(network::init_params(arch, cfg.pretrain_seed()).extractor,
                                 layout.extractor);
    }
    const int code = run_cli("train -q --config '" + pipeline::Layout(state.first).config.string() +
                                 "' --out '" + dir.string() + "' train.epochs=5",
                             dir.string() + ".log");
    if (code != 0) return {false, format("%s training exited with %d", variant, code)};
    const auto losses = loss_column(layout.train_loss);
    if (losses.size() != 5) return {false, format("%s run logged %zu epochs", variant, losses.size())};
    final_loss.push_back(losses.back());
  }
  return {final_loss[0] < final_loss[1],
          format("epoch-5 loss pretrained %.6g vs random %.6g", final_loss[0], final_loss[1])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tslcd acceptance suite"};
  fs::path work = fs::temp_directory_path() / "tslcd_acceptance";
  app.add_option("--work-dir", work, "scratch directory for pipeline runs");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(work);

  EndToEnd state{work / "run_a", work / "run_b"};
  const std::vector<Criterion> criteria{
      {1, "loss reduction", 1.0, loss_reduction},
      {2, "gradient fidelity", 30.0, gradient_fidelity},
      {3, "sampler oracle", 5.0, sampler_oracle},
      {4, "smooth oracle", 10.0, smooth_oracle},
      {5, "metrics hand-check", 1.0, metrics_hand_check},
      {6, "end-to-end directional check", 900.0, [&] { return end_to_end(state); }},
      {7, "determinism audit", 900.0, [&] { return determinism(state); }},
      {8, "pretraining utility", 900.0, [&] { return pretraining_utility(state, work); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds < c.budget_seconds;
    const bool pass = outcome.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("[PRIMARY] criterion %d (%s): %s - %s; %.2f s (budget %.0f s%s)\n", c.id,
                c.name.c_str(), pass ? "PASS" : "FAIL", outcome.detail.c_str(), seconds,
                c.budget_seconds, in_budget ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
