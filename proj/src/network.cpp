// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace tslcd::network {

void Architecture::validate() const {
  if (bands < 1) throw InvalidArgument("network needs at least one input band");
  if (widths.empty()) throw InvalidArgument("network needs at least one conv layer");
  for (int w : widths) {
    if (w < 1) throw InvalidArgument("conv widths must be positive");
  }
  if (hidden < 1) throw InvalidArgument("head hidden width must be positive");
}

template <typename Scalar>
std::vector<std::span<Scalar>> tensors(ExtractorParams<Scalar>& params) {
  std::vector<std::span<Scalar>> out;
  for (auto& layer : params.layers) {
    out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  return out;
}

template <typename Scalar>
std::vector<std::span<Scalar>> tensors(HeadParams<Scalar>& params) {
  std::vector<std::span<Scalar>> out;
  for (auto* m : {&params.fc1_weight}) {
    out.emplace_back(m->data(), static_cast<std::size_t>(m->size()));
  }
  for (auto* v : {&params.fc1_bias, &params.fc2_weight, &params.fc2_bias}) {
    out.emplace_back(v->data(), static_cast<std::size_t>(v->size()));
  }
  return out;
}

template <typename Scalar>
ExtractorParams<Scalar> zeros_like(const ExtractorParams<Scalar>& params) {
  ExtractorParams<Scalar> out;
  for (const auto& layer : params.layers) {
    out.layers.push_back({Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()),
                          Vector<Scalar>::Zero(layer.bias.size())});
  }
  return out;
}

template <typename Scalar>
HeadParams<Scalar> zeros_like(const HeadParams<Scalar>& params) {
  return {Matrix<Scalar>::Zero(params.fc1_weight.rows(), params.fc1_weight.cols()),
          Vector<Scalar>::Zero(params.fc1_bias.size()),
          Vector<Scalar>::Zero(params.fc2_weight.size()), Vector<Scalar>::Zero(1)};
}

template <typename To, typename From>
ExtractorParams<To> cast(const ExtractorParams<From>& params) {
  ExtractorParams<To> out;
  for (const auto& layer : params.layers) {
    out.layers.push_back({layer.weight.template cast<To>(), layer.bias.template cast<To>()});
  }
  return out;
}

template <typename To, typename From>
HeadParams<To> cast(const HeadParams<From>& params) {
  return {params.fc1_weight.template cast<To>(), params.fc1_bias.template cast<To>(),
          params.fc2_weight.template cast<To>(), params.fc2_bias.template cast<To>()};
}

bool all_finite(const ModelParams& params) {
  for (const auto& layer : params.extractor.layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  const auto& h = params.head;
  return h.fc1_weight.allFinite() && h.fc1_bias.allFinite() && h.fc2_weight.allFinite() &&
         h.fc2_bias.allFinite();
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  auto he = [&rng](Matrix<float>& m, int fan_in) {
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  ModelParams params;
  int in = arch.bands;
  for (int out : arch.widths) {
    ConvLayer<float> layer{Matrix<float>(out, 9 * in), Vector<float>::Zero(out)};
    he(layer.weight, 9 * in);
    params.extractor.layers.push_back(std::move(layer));
    in = out;
  }
  const int features = 2 * arch.feature_dim();
  params.head.fc1_weight.resize(arch.hidden, features);
  he(params.head.fc1_weight, features);
  params.head.fc1_bias = Vector<float>::Zero(arch.hidden);
  Matrix<float> fc2(arch.hidden, 1);
  he(fc2, arch.hidden);
  params.head.fc2_weight = fc2.col(0);
  params.head.fc2_bias = Vector<float>::Zero(1);
  return params;
}

namespace {

template <typename Scalar>
void im2col(const Matrix<Scalar>& input, int n, int patches, Matrix<Scalar>& columns) {
  const int channels = static_cast<int>(input.rows());
  const int nn = n * n;
  columns.setZero(9 * channels, static_cast<Eigen::Index>(patches) * nn);
  const Scalar* src = input.data();
  Scalar* dst = columns.data();
  const std::size_t col_stride = static_cast<std::size_t>(9) * channels;
  for (int p = 0; p < patches; ++p) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const std::size_t j = static_cast<std::size_t>(p) * nn + y * n + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= n) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= n) continue;
            const std::size_t source = static_cast<std::size_t>(p) * nn + sy * n + sx;
            std::memcpy(dst + j * col_stride + static_cast<std::size_t>(ky * 3 + kx) * channels,
                        src + source * channels, sizeof(Scalar) * channels);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& columns, int channels, int n, int patches,
            Matrix<Scalar>& grad_input) {
  const int nn = n * n;
  grad_input.setZero(channels, static_cast<Eigen::Index>(patches) * nn);
  const Scalar* src = columns.data();
  Scalar* dst = grad_input.data();
  const std::size_t col_stride = static_cast<std::size_t>(9) * channels;
  for (int p = 0; p < patches; ++p) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const std::size_t j = static_cast<std::size_t>(p) * nn + y * n + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= n) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= n) continue;
            const std::size_t target = static_cast<std::size_t>(p) * nn + sy * n + sx;
            const Scalar* from = src + j * col_stride + static_cast<std::size_t>(ky * 3 + kx) * channels;
            Scalar* to = dst + target * channels;
            for (int c = 0; c < channels; ++c) to[c] += from[c];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Scalar>
const Matrix<Scalar>& ExtractorTape<Scalar>::forward(const ExtractorParams<Scalar>& params,
                                                      const Matrix<Scalar>& input,
                                                      int patch_size) {
  const int nn = patch_size * patch_size;
  if (params.layers.empty()) throw InvalidArgument("extractor has no layers");
  if (input.rows() != params.in_channels() || nn == 0 || input.cols() % nn != 0) {
    throw InvalidArgument("extractor input is " + std::to_string(input.rows()) + "x" +
                          std::to_string(input.cols()) + " but expects " +
                          std::to_string(params.in_channels()) + " bands of " +
                          std::to_string(patch_size) + "x" + std::to_string(patch_size) +
                          " patches");
  }
  patch_size_ = patch_size;
  patches_ = static_cast<int>(input.cols() / nn);
  const std::size_t layers = params.layers.size();
  columns_.resize(layers);
  activations_.resize(layers);
  const Matrix<Scalar>* current = &input;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& layer = params.layers[l];
    if (current->rows() != layer.in_channels()) {
      throw InvalidArgument("conv layer " + std::to_string(l) + " channel mismatch");
    }
    im2col(*current, patch_size, patches_, columns_[l]);
    activations_[l].noalias() = layer.weight * columns_[l];
    activations_[l].colwise() += layer.bias;
    activations_[l] = activations_[l].cwiseMax(Scalar(0));
    current = &activations_[l];
  }
  features_.resize(current->rows(), patches_);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(nn);
  for (int p = 0; p < patches_; ++p) {
    features_.col(p) = current->middleCols(static_cast<Eigen::Index>(p) * nn, nn).rowwise().sum() * inv;
  }
  return features_;
}

template <typename Scalar>
void ExtractorTape<Scalar>::backward(const ExtractorParams<Scalar>& params,
                                     const Matrix<Scalar>& grad_features,
                                     ExtractorParams<Scalar>& grads) const {
  const int nn = patch_size_ * patch_size_;
  if (grad_features.rows() != features_.rows() || grad_features.cols() != patches_) {
    throw InvalidArgument("feature gradient shape does not match the last forward pass");
  }
  const std::size_t layers = params.layers.size();
  Matrix<Scalar> grad(features_.rows(), static_cast<Eigen::Index>(patches_) * nn);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(nn);
  for (int p = 0; p < patches_; ++p) {
    grad.middleCols(static_cast<Eigen::Index>(p) * nn, nn) =
        (grad_features.col(p) * inv).replicate(1, nn);
  }
  Matrix<Scalar> grad_columns;
  for (std::size_t l = layers; l-- > 0;) {
    const auto& layer = params.layers[l];
    grad = grad.cwiseProduct(
        (activations_[l].array() > Scalar(0)).template cast<Scalar>().matrix());
    grads.layers[l].weight.noalias() += grad * columns_[l].transpose();
    grads.layers[l].bias += grad.rowwise().sum();
    if (l == 0) break;
    grad_columns.noalias() = layer.weight.transpose() * grad;
    col2im(grad_columns, layer.in_channels(), patch_size_, patches_, grad);
  }
}

template <typename Scalar>
const Matrix<Scalar>& HeadTape<Scalar>::forward(const HeadParams<Scalar>& head,
                                                 const Matrix<Scalar>& f0,
                                                 const Matrix<Scalar>& f1) {
  if (f0.rows() != f1.rows() || f0.cols() != f1.cols() || 2 * f0.rows() != head.input_dim()) {
    throw InvalidArgument("head expects two feature blocks of width " +
                          std::to_string(head.input_dim() / 2));
  }
  input_.resize(2 * f0.rows(), f0.cols());
  input_.topRows(f0.rows()) = f0;
  input_.bottomRows(f1.rows()) = f1;
  pre_activation_.noalias() = head.fc1_weight * input_;
  pre_activation_.colwise() += head.fc1_bias;
  hidden_ = pre_activation_.cwiseMax(Scalar(0));
  logits_.noalias() = head.fc2_weight.transpose() * hidden_;
  logits_.array() += head.fc2_bias(0);
  return logits_;
}

template <typename Scalar>
void HeadTape<Scalar>::backward(const HeadParams<Scalar>& head, const Matrix<Scalar>& grad_logits,
                                HeadParams<Scalar>& grads, Matrix<Scalar>& grad_f0,
                                Matrix<Scalar>& grad_f1) const {
  if (grad_logits.rows() != 1 || grad_logits.cols() != logits_.cols()) {
    throw InvalidArgument("logit gradient shape does not match the last forward pass");
  }
  grads.fc2_weight.noalias() += hidden_ * grad_logits.transpose();
  grads.fc2_bias(0) += grad_logits.sum();
  Matrix<Scalar> grad_pre = (head.fc2_weight * grad_logits)
                                .cwiseProduct((pre_activation_.array() > Scalar(0))
                                                  .template cast<Scalar>()
                                                  .matrix());
  grads.fc1_weight.noalias() += grad_pre * input_.transpose();
  grads.fc1_bias += grad_pre.rowwise().sum();
  const Matrix<Scalar> grad_input = head.fc1_weight.transpose() * grad_pre;
  const Eigen::Index half = grad_input.rows() / 2;
  grad_f0 = grad_input.topRows(half);
  grad_f1 = grad_input.bottomRows(half);
}

template <typename Scalar>
Matrix<Scalar> pack_patches(std::span<const raster::Patch* const> patches) {
  if (patches.empty()) return {};
  const int n = patches.front()->size;
  const int bands = patches.front()->bands;
  const int nn = n * n;
  Matrix<Scalar> out(bands, static_cast<Eigen::Index>(patches.size()) * nn);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const raster::Patch& patch = *patches[p];
    if (patch.size != n || patch.bands != bands) {
      throw InvalidArgument("patches in one batch must share size and band count");
    }
    for (int b = 0; b < bands; ++b) {
      for (int i = 0; i < nn; ++i) {
        out(b, static_cast<Eigen::Index>(p) * nn + i) =
            static_cast<Scalar>(patch.values[static_cast<std::size_t>(b) * nn + i]);
      }
    }
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> extract_features(const ExtractorParams<Scalar>& params, const raster::Patch& patch) {
  if (patch.bands != params.in_channels() || patch.size < 1 ||
      patch.values.size() != static_cast<std::size_t>(patch.bands) * patch.size * patch.size) {
    throw InvalidArgument("patch shape " + std::to_string(patch.size) + "x" +
                          std::to_string(patch.size) + "x" + std::to_string(patch.bands) +
                          " does not fit an extractor with " +
                          std::to_string(params.in_channels()) + " input bands");
  }
  const raster::Patch* one[] = {&patch};
  ExtractorTape<Scalar> tape;
  return tape.forward(params, pack_patches<Scalar>(one), patch.size).col(0);
}

FeatureVector extract_features(const ExtractorParams<float>& params, const raster::Patch& patch) {
  return extract_features<float>(params, patch);
}

double feature_distance(std::span<const float> f0, std::span<const float> f1) {
  if (f0.size() != f1.size()) throw InvalidArgument("feature vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    const double d = static_cast<double>(f0[i]) - f1[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double feature_distance(const FeatureVector& f0, const FeatureVector& f1) {
  return feature_distance(std::span<const float>(f0.data(), static_cast<std::size_t>(f0.size())),
                          std::span<const float>(f1.data(), static_cast<std::size_t>(f1.size())));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double probability(double logit) {
  return std::clamp(sigmoid(logit), kProbabilityFloor, 1.0 - kProbabilityFloor);
}

template <typename Scalar>
double predict_change(const HeadParams<Scalar>& head, const Vector<Scalar>& f0,
                      const Vector<Scalar>& f1) {
  HeadTape<Scalar> tape;
  return probability(static_cast<double>(tape.forward(head, f0, f1)(0, 0)));
}

template <typename Scalar>
HeadParams<Scalar> predict_change_gradient(const HeadParams<Scalar>& head,
                                           const Vector<Scalar>& f0, const Vector<Scalar>& f1) {
  HeadTape<Scalar> tape;
  const double logit = static_cast<double>(tape.forward(head, f0, f1)(0, 0));
  const double s = sigmoid(logit);
  const bool clamped = s < kProbabilityFloor || s > 1.0 - kProbabilityFloor;
  Matrix<Scalar> grad_logit(1, 1);
  grad_logit(0, 0) = clamped ? Scalar(0) : static_cast<Scalar>(s * (1.0 - s));
  HeadParams<Scalar> grads = zeros_like(head);
  Matrix<Scalar> unused0, unused1;
  tape.backward(head, grad_logit, grads, unused0, unused1);
  return grads;
}

#define TSLCD_INSTANTIATE(S)                                                                    \
  template std::vector<std::span<S>> tensors(ExtractorParams<S>&);                              \
  template std::vector<std::span<S>> tensors(HeadParams<S>&);                                   \
  template ExtractorParams<S> zeros_like(const ExtractorParams<S>&);                            \
  template HeadParams<S> zeros_like(const HeadParams<S>&);                                      \
  template class ExtractorTape<S>;                                                              \
  template class HeadTape<S>;                                                                   \
  template Matrix<S> pack_patches<S>(std::span<const raster::Patch* const>);                    \
  template Vector<S> extract_features<S>(const ExtractorParams<S>&, const raster::Patch&);      \
  template double predict_change(const HeadParams<S>&, const Vector<S>&, const Vector<S>&);     \
  template HeadParams<S> predict_change_gradient(const HeadParams<S>&, const Vector<S>&,        \
                                                 const Vector<S>&);

TSLCD_INSTANTIATE(float)
TSLCD_INSTANTIATE(double)
#undef TSLCD_INSTANTIATE

template ExtractorParams<double> cast<double, float>(const ExtractorParams<float>&);
template ExtractorParams<float> cast<float, double>(const ExtractorParams<double>&);
template HeadParams<double> cast<double, float>(const HeadParams<float>&);
template HeadParams<float> cast<float, double>(const HeadParams<double>&);

}  // namespace tslcd::network
