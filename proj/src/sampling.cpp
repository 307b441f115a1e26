// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/sampling.hpp"

#include <fstream>
#include <map>
#include <random>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tslcd/binary_io.hpp"

namespace tslcd::sampling {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'L', 'P'};
constexpr std::uint16_t kVersion = 1;

void check_patch_size(int n) {
  if (n < 1 || n % 2 == 0) {
    throw InvalidArgument("patch size must be a positive odd number, got " + std::to_string(n));
  }
}

}  // namespace

double patch_purity(const ClassMap& labels, int row, int col, int n) {
  check_patch_size(n);
  const int r = (n - 1) / 2;
  if (row - r < 0 || col - r < 0 || row + r >= labels.height() || col + r >= labels.width()) {
    throw InvalidArgument("purity window of size " + std::to_string(n) + " at (" +
                          std::to_string(row) + ", " + std::to_string(col) +
                          ") leaves the class map");
  }
  const std::int32_t center = labels.at(row, col);
  int same = 0;
  for (int y = row - r; y <= row + r; ++y) {
    for (int x = col - r; x <= col + r; ++x) {
      same += labels.at(y, x) == center ? 1 : 0;
    }
  }
  return static_cast<double>(same) / static_cast<double>(n * n);
}

bool is_reliable(const ClassMap& labels, int row, int col, int n, double p) {
  return patch_purity(labels, row, col, n) >= p;
}

std::vector<Center> reliable_centers(const segmentation::SegmentationMap& seg, int n, double p) {
  check_patch_size(n);
  if (!(p > 0.0 && p <= 1.0)) {
    throw InvalidArgument("purity threshold must lie in (0, 1], got " + std::to_string(p));
  }
  const int r = (n - 1) / 2;
  const ClassMap padded = raster::pad_reflect(seg.labels, r);
  std::vector<Center> centers;
  for (int row = 0; row < seg.labels.height(); ++row) {
    for (int col = 0; col < seg.labels.width(); ++col) {
      if (is_reliable(padded, row + r, col + r, n, p)) {
        centers.push_back({row, col, seg.labels.at(row, col)});
      }
    }
  }
  return centers;
}

PairDataset sample_pairs(const segmentation::SegmentationMap& seg,
                         const raster::BiTemporalPair& pair, const SamplingRequest& request) {
  pair.validate(request.patch_size);
  if (!seg.labels.same_extent(pair.t0)) {
    throw InvalidArgument("segmentation map " + seg.labels.shape_string() +
                          " does not match the image pair " + pair.t0.shape_string());
  }
  if (request.similar < 0 || request.dissimilar < 0 ||
      request.similar + request.dissimilar == 0) {
    throw InvalidArgument("sample counts must be non-negative and not both zero");
  }

  const std::vector<Center> centers = reliable_centers(seg, request.patch_size, request.purity);
  const std::uint64_t pool = centers.size();
  if (pool < 2) {
    throw InvalidArgument("only " + std::to_string(pool) +
                          " reliable centers at purity " + std::to_string(request.purity) +
                          "; at least 2 are needed (achievable: 0 similar, 0 dissimilar)");
  }

  std::map<std::int32_t, std::vector<std::uint32_t>> by_class;
  for (std::uint32_t i = 0; i < centers.size(); ++i) by_class[centers[i].cls].push_back(i);

  std::vector<const std::vector<std::uint32_t>*> members;
  std::vector<double> weights;
  std::uint64_t similar_pool = 0;
  std::uint64_t same_class_total = 0;
  for (const auto& [cls, idx] : by_class) {
    const std::uint64_t c = idx.size();
    same_class_total += c * c;
    if (c >= 2) {
      members.push_back(&idx);
      weights.push_back(static_cast<double>(c * (c - 1)));
      similar_pool += c * (c - 1);
    }
  }
  const std::uint64_t dissimilar_pool = pool * pool - same_class_total;

  if (request.similar > 0 && similar_pool == 0) {
    throw InvalidArgument("no class has two reliable centers; achievable: 0 similar, " +
                          std::to_string(dissimilar_pool) + " dissimilar pairs");
  }
  if (request.dissimilar > 0 && dissimilar_pool == 0) {
    throw InvalidArgument("all reliable centers share one class; no dissimilar pair exists "
                          "(achievable: " + std::to_string(similar_pool) +
                          " similar, 0 dissimilar)");
  }
  const bool similar_replace = static_cast<std::uint64_t>(request.similar) > similar_pool;
  const bool dissimilar_replace =
      static_cast<std::uint64_t>(request.dissimilar) > dissimilar_pool;
  if (similar_replace) {
    spdlog::warn("only {} distinct similar pairs for {} requested; sampling with replacement",
                 similar_pool, request.similar);
  }
  if (dissimilar_replace) {
    spdlog::warn("only {} distinct dissimilar pairs for {} requested; sampling with replacement",
                 dissimilar_pool, request.dissimilar);
  }

  std::mt19937_64 rng(request.seed);
  std::bernoulli_distribution coin(0.5);
  const raster::PaddedImage padded_t0(pair.t0, request.patch_size);
  const raster::PaddedImage padded_t1(pair.t1, request.patch_size);

  PairDataset dataset;
  dataset.similar = request.similar;
  dataset.dissimilar = request.dissimilar;
  dataset.patch_size = request.patch_size;
  dataset.bands = pair.bands();
  dataset.purity = request.purity;
  dataset.samples.reserve(static_cast<std::size_t>(request.similar) + request.dissimilar);

  std::unordered_set<std::uint64_t> used;
  int cross_date = 0;
  auto emit = [&](std::uint32_t a, std::uint32_t b) {
    PairSample s;
    s.date_a = coin(rng) ? Date::kT1 : Date::kT0;
    s.date_b = coin(rng) ? Date::kT1 : Date::kT0;
    const auto& src_a = s.date_a == Date::kT0 ? padded_t0 : padded_t1;
    const auto& src_b = s.date_b == Date::kT0 ? padded_t0 : padded_t1;
    s.patch_a = src_a.patch_at(centers[a].row, centers[a].col);
    s.patch_b = src_b.patch_at(centers[b].row, centers[b].col);
    s.label = centers[a].cls == centers[b].cls ? 1 : 0;
    cross_date += s.date_a != s.date_b ? 1 : 0;
    dataset.samples.push_back(std::move(s));
  };
  auto fresh = [&](std::uint32_t a, std::uint32_t b, bool replace) {
    return replace || used.insert(static_cast<std::uint64_t>(a) * pool + b).second;
  };

  if (request.similar > 0) {
    std::discrete_distribution<std::size_t> pick_class(weights.begin(), weights.end());
    for (int emitted = 0; emitted < request.similar;) {
      const auto& idx = *members[pick_class(rng)];
      std::uniform_int_distribution<std::size_t> first(0, idx.size() - 1);
      std::uniform_int_distribution<std::size_t> second(0, idx.size() - 2);
      const std::size_t i = first(rng);
      std::size_t j = second(rng);
      if (j >= i) ++j;
      if (fresh(idx[i], idx[j], similar_replace)) {
        emit(idx[i], idx[j]);
        ++emitted;
      }
    }
  }
  if (request.dissimilar > 0) {
    std::uniform_int_distribution<std::uint32_t> any(0, static_cast<std::uint32_t>(pool - 1));
    for (int emitted = 0; emitted < request.dissimilar;) {
      const std::uint32_t a = any(rng);
      const std::uint32_t b = any(rng);
      if (centers[a].cls == centers[b].cls) continue;
      if (fresh(a, b, dissimilar_replace)) {
        emit(a, b);
        ++emitted;
      }
    }
  }
  spdlog::info("sampled {} similar and {} dissimilar pairs from {} reliable centers; {} pairs "
               "mix dates", request.similar, request.dissimilar, pool, cross_date);
  return dataset;
}

void save_dataset(const PairDataset& dataset, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, 4);
  io::put<std::uint16_t>(out, kVersion);
  io::put<std::uint32_t>(out, dataset.patch_size);
  io::put<std::uint32_t>(out, dataset.similar);
  io::put<std::uint32_t>(out, dataset.dissimilar);
  io::put<std::uint32_t>(out, dataset.bands);
  io::put<float>(out, static_cast<float>(dataset.purity));
  const std::size_t values =
      static_cast<std::size_t>(dataset.bands) * dataset.patch_size * dataset.patch_size;
  for (const PairSample& s : dataset.samples) {
    if (s.patch_a.values.size() != values || s.patch_b.values.size() != values) {
      throw InvalidArgument("pair sample patch shape does not match the dataset header");
    }
    io::put<std::uint8_t>(out, s.label);
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.date_a));
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.date_b));
    io::put<std::uint8_t>(out, 0);
    io::put<std::int32_t>(out, s.patch_a.center_row);
    io::put<std::int32_t>(out, s.patch_a.center_col);
    io::put<std::int32_t>(out, s.patch_b.center_row);
    io::put<std::int32_t>(out, s.patch_b.center_col);
    io::put_floats(out, s.patch_a.values);
    io::put_floats(out, s.patch_b.values);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PairDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pair cache '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw IoError("'" + path.string() + "' is not a TSLP pair cache");
  }
  const std::string what = "pair cache '" + path.string() + "'";
  const auto version = io::get<std::uint16_t>(in, what);
  if (version != kVersion) {
    throw IoError(what + " has unsupported version " + std::to_string(version));
  }
  PairDataset dataset;
  dataset.patch_size = static_cast<int>(io::get<std::uint32_t>(in, what));
  dataset.similar = static_cast<int>(io::get<std::uint32_t>(in, what));
  dataset.dissimilar = static_cast<int>(io::get<std::uint32_t>(in, what));
  dataset.bands = static_cast<int>(io::get<std::uint32_t>(in, what));
  dataset.purity = io::get<float>(in, what);
  const int n = dataset.patch_size;
  if (n < 1 || n % 2 == 0 || dataset.bands < 1) {
    throw IoError(what + " has an invalid header");
  }
  const std::size_t values = static_cast<std::size_t>(dataset.bands) * n * n;
  const std::size_t total = static_cast<std::size_t>(dataset.similar) + dataset.dissimilar;
  dataset.samples.resize(total);
  for (PairSample& s : dataset.samples) {
    s.label = io::get<std::uint8_t>(in, what);
    s.date_a = static_cast<Date>(io::get<std::uint8_t>(in, what));
    s.date_b = static_cast<Date>(io::get<std::uint8_t>(in, what));
    io::get<std::uint8_t>(in, what);
    s.patch_a = {n, dataset.bands, io::get<std::int32_t>(in, what), 0, {}};
    s.patch_a.center_col = io::get<std::int32_t>(in, what);
    s.patch_b = {n, dataset.bands, io::get<std::int32_t>(in, what), 0, {}};
    s.patch_b.center_col = io::get<std::int32_t>(in, what);
    s.patch_a.values.resize(values);
    s.patch_b.values.resize(values);
    io::get_floats(in, s.patch_a.values, what);
    io::get_floats(in, s.patch_b.values, what);
  }
  return dataset;
}

}  // namespace tslcd::sampling
