// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/checkpoint.hpp"

#include <fstream>
#include <vector>

#include "tslcd/binary_io.hpp"

namespace tslcd::checkpoint {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'L', 'W'};
constexpr std::uint16_t kVersion = 1;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;  // row-major
};

Tensor conv_weight(const network::ConvLayer<float>& layer) {
  const int out = layer.out_channels();
  const int in = layer.in_channels();
  Tensor t{{static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in), 3, 3}, {}};
  t.data.reserve(static_cast<std::size_t>(out) * in * 9);
  for (int o = 0; o < out; ++o)
    for (int c = 0; c < in; ++c)
      for (int k = 0; k < 9; ++k) t.data.push_back(layer.weight(o, k * in + c));
  return t;
}

Tensor vector_tensor(const network::Vector<float>& v) {
  return {{static_cast<std::uint32_t>(v.size())}, {v.data(), v.data() + v.size()}};
}

Tensor matrix_tensor(const network::Matrix<float>& m) {
  Tensor t{{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

std::vector<Tensor> extractor_tensors(const network::ExtractorParams<float>& params) {
  std::vector<Tensor> out;
  for (const auto& layer : params.layers) {
    out.push_back(conv_weight(layer));
    out.push_back(vector_tensor(layer.bias));
  }
  return out;
}

void write(const std::vector<Tensor>& tensors, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, 4);
  io::put<std::uint16_t>(out, kVersion);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) io::put<std::uint32_t>(out, d);
    io::put_floats(out, t.data);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<Tensor> read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string what = "checkpoint '" + path.string() + "'";
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw IoError("'" + path.string() + "' is not a TSLW checkpoint");
  }
  const auto version = io::get<std::uint16_t>(in, what);
  if (version != kVersion) {
    throw IoError(what + " has unsupported version " + std::to_string(version));
  }
  const auto count = io::get<std::uint32_t>(in, what);
  if (count > 4096) throw IoError(what + " declares an implausible tensor count");
  std::vector<Tensor> tensors(count);
  for (Tensor& t : tensors) {
    const auto rank = io::get<std::uint32_t>(in, what);
    if (rank < 1 || rank > 4) throw IoError(what + " holds a tensor of rank " + std::to_string(rank));
    std::size_t size = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.dims.push_back(io::get<std::uint32_t>(in, what));
      size *= t.dims.back();
    }
    if (size > (std::size_t{1} << 28)) throw IoError(what + " holds an implausibly large tensor");
    t.data.resize(size);
    io::get_floats(in, t.data, what);
  }
  return tensors;
}

// Consumes leading conv weight/bias pairs.
network::ExtractorParams<float> parse_extractor(const std::vector<Tensor>& tensors,
                                                std::size_t& next, const std::string& what) {
  network::ExtractorParams<float> params;
  while (next + 1 < tensors.size() && tensors[next].dims.size() == 4) {
    const Tensor& w = tensors[next];
    const Tensor& b = tensors[next + 1];
    const auto out = static_cast<int>(w.dims[0]);
    const auto in = static_cast<int>(w.dims[1]);
    if (w.dims[2] != 3 || w.dims[3] != 3 || b.dims.size() != 1 ||
        b.dims[0] != static_cast<std::uint32_t>(out)) {
      throw IoError(what + " has a malformed conv layer");
    }
    if (!params.layers.empty() && params.layers.back().out_channels() != in) {
      throw IoError(what + " has inconsistent conv channel counts");
    }
    network::ConvLayer<float> layer{network::Matrix<float>(out, 9 * in),
                                    network::Vector<float>(out)};
    std::size_t i = 0;
    for (int o = 0; o < out; ++o)
      for (int c = 0; c < in; ++c)
        for (int k = 0; k < 9; ++k) layer.weight(o, k * in + c) = w.data[i++];
    for (int o = 0; o < out; ++o) layer.bias(o) = b.data[o];
    params.layers.push_back(std::move(layer));
    next += 2;
  }
  if (params.layers.empty()) throw IoError(what + " holds no conv layers");
  return params;
}

}  // namespace

void save_extractor(const network::ExtractorParams<float>& params,
                    const std::filesystem::path& path) {
  write(extractor_tensors(params), path);
}

network::ExtractorParams<float> load_extractor(const std::filesystem::path& path) {
  const auto tensors = read(path);
  std::size_t next = 0;
  auto params = parse_extractor(tensors, next, "checkpoint '" + path.string() + "'");
  if (next != tensors.size()) {
    throw IoError("checkpoint '" + path.string() + "' holds more than an extractor");
  }
  return params;
}

void save_model(const network::ModelParams& params, const std::filesystem::path& path) {
  auto tensors = extractor_tensors(params.extractor);
  const auto& head = params.head;
  tensors.push_back(matrix_tensor(head.fc1_weight));
  tensors.push_back(vector_tensor(head.fc1_bias));
  tensors.push_back(matrix_tensor(head.fc2_weight.transpose()));
  tensors.push_back(vector_tensor(head.fc2_bias));
  write(tensors, path);
}

network::ModelParams load_model(const std::filesystem::path& path) {
  const std::string what = "checkpoint '" + path.string() + "'";
  const auto tensors = read(path);
  std::size_t next = 0;
  network::ModelParams params;
  params.extractor = parse_extractor(tensors, next, what);
  if (tensors.size() - next != 4) throw IoError(what + " does not hold a change head");
  const Tensor& w1 = tensors[next];
  const Tensor& b1 = tensors[next + 1];
  const Tensor& w2 = tensors[next + 2];
  const Tensor& b2 = tensors[next + 3];
  const auto features = static_cast<std::uint32_t>(2 * params.extractor.feature_dim());
  if (w1.dims.size() != 2 || w1.dims[1] != features || b1.dims.size() != 1 ||
      b1.dims[0] != w1.dims[0] || w2.dims.size() != 2 || w2.dims[0] != 1 ||
      w2.dims[1] != w1.dims[0] || b2.dims.size() != 1 || b2.dims[0] != 1) {
    throw IoError(what + " has a malformed change head");
  }
  const auto hidden = static_cast<Eigen::Index>(w1.dims[0]);
  auto& head = params.head;
  head.fc1_weight.resize(hidden, features);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < hidden; ++r)
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(features); ++c)
      head.fc1_weight(r, c) = w1.data[i++];
  head.fc1_bias = Eigen::Map<const network::Vector<float>>(b1.data.data(), hidden);
  head.fc2_weight = Eigen::Map<const network::Vector<float>>(w2.data.data(), hidden);
  head.fc2_bias = Eigen::Map<const network::Vector<float>>(b2.data.data(), 1);
  return params;
}

}  // namespace tslcd::checkpoint
