// src/nn/model.cc

// Copyright 2026 The pstn-sqm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sqm/nn/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sqm/error.h"

namespace sqm::nn {

namespace {

constexpr bool kPool[kConvStages] = {true, true, false, true, false, false};
constexpr bool kDropout[kConvStages] = {false, true, false, true, true, false};
constexpr double kHeadBiasInit = 3.0;

template <typename T>
void FillUniform(std::vector<T> *v, double limit, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto &x : *v) x = static_cast<T>(dist(*rng));
}

}  // namespace

ModelConfig ModelConfig::Downsized() {
  ModelConfig cfg;
  cfg.conv_channels = {8, 8, 8, 8, 8, 8};
  cfg.lstm_hidden = 8;
  return cfg;
}

ConvSpec StageSpec(const ModelConfig &cfg, int stage) {
  ConvSpec s;
  s.c_out = cfg.conv_channels[static_cast<std::size_t>(stage)];
  s.kernel = 3;
  // The last stage maps 4x4 to 1x1: 3x3 kernel, stride 2, no padding.
  s.stride = stage == kConvStages - 1 ? 2 : 1;
  s.padding = stage == kConvStages - 1 ? 0 : 1;
  return s;
}

bool StageHasPool(int stage) { return kPool[stage]; }
bool StageHasDropout(int stage) { return kDropout[stage]; }

std::vector<ShapeRecord> ExpectedShapes(const ModelConfig &cfg, int batch, int steps) {
  const int n = batch * steps;
  std::vector<ShapeRecord> out;
  int c = 1, h = cfg.n_mels, w = cfg.segment_width;
  out.push_back({"input", {n, c, h, w}});
  int pool_no = 0;
  for (int s = 0; s < kConvStages; ++s) {
    const ConvSpec spec = StageSpec(cfg, s);
    c = spec.c_out;
    h = ConvOutSize(h, spec.kernel, spec.stride, spec.padding);
    w = ConvOutSize(w, spec.kernel, spec.stride, spec.padding);
    out.push_back({"conv" + std::to_string(s + 1), {n, c, h, w}});
    if (kPool[s]) {
      h /= 2;
      w /= 2;
      out.push_back({"pool" + std::to_string(++pool_no), {n, c, h, w}});
    }
  }
  out.push_back({"fc", {n, cfg.feature_dim}});
  out.push_back({"bilstm", {batch, steps, 2 * cfg.lstm_hidden}});
  out.push_back({"head", {batch, 1}});
  return out;
}

template <typename T>
Model<T>::Model(const ModelConfig &cfg) : cfg_(cfg) {
  auto add = [&](std::string name, std::vector<int> shape, bool trainable) {
    Parameter<T> p;
    p.name = std::move(name);
    p.value = Tensor<T>(shape);
    if (trainable) p.grad = Tensor<T>(shape);
    p.trainable = trainable;
    params_.push_back(std::move(p));
    return params_.size() - 1;
  };
  int c_in = 1, h = cfg.n_mels, w = cfg.segment_width;
  for (int s = 0; s < kConvStages; ++s) {
    const ConvSpec spec = StageSpec(cfg, s);
    const std::string conv = "conv" + std::to_string(s + 1);
    const std::string bn = "bn" + std::to_string(s + 1);
    const auto us = static_cast<std::size_t>(s);
    idx_.conv_w[us] = add(conv + ".weight", {spec.c_out, c_in, spec.kernel, spec.kernel}, true);
    idx_.conv_b[us] = add(conv + ".bias", {spec.c_out}, true);
    idx_.bn_gamma[us] = add(bn + ".gamma", {spec.c_out}, true);
    idx_.bn_beta[us] = add(bn + ".beta", {spec.c_out}, true);
    idx_.bn_mean[us] = add(bn + ".running_mean", {spec.c_out}, false);
    idx_.bn_var[us] = add(bn + ".running_var", {spec.c_out}, false);
    c_in = spec.c_out;
    h = ConvOutSize(h, spec.kernel, spec.stride, spec.padding);
    w = ConvOutSize(w, spec.kernel, spec.stride, spec.padding);
    if (kPool[s]) {
      h /= 2;
      w /= 2;
    }
    if (h < 1 || w < 1)
      Fail(ErrorKind::kShape, "input patch " + ShapeString({cfg.n_mels, cfg.segment_width}) +
                                  " too small for the conv stack");
  }
  const int flat = c_in * h * w;
  idx_.fc_w = add("fc.weight", {cfg.feature_dim, flat}, true);
  idx_.fc_b = add("fc.bias", {cfg.feature_dim}, true);
  const int gates = 4 * cfg.lstm_hidden;
  const char *dirs[2] = {"lstm.fwd", "lstm.bwd"};
  for (int d = 0; d < 2; ++d) {
    const std::string p = dirs[d];
    idx_.lstm_W[static_cast<std::size_t>(d)] = add(p + ".W", {gates, cfg.feature_dim}, true);
    idx_.lstm_U[static_cast<std::size_t>(d)] = add(p + ".U", {gates, cfg.lstm_hidden}, true);
    idx_.lstm_b[static_cast<std::size_t>(d)] = add(p + ".b", {gates}, true);
  }
  idx_.head_w = add("head.weight", {1, 2 * cfg.lstm_hidden}, true);
  idx_.head_b = add("head.bias", {1}, true);
  for (int s = 0; s < kConvStages; ++s) {
    auto &g = params_[idx_.bn_gamma[static_cast<std::size_t>(s)]].value.data;
    std::fill(g.begin(), g.end(), T(1));
    auto &v = params_[idx_.bn_var[static_cast<std::size_t>(s)]].value.data;
    std::fill(v.begin(), v.end(), T(1));
  }
}

template <typename T>
void Model<T>::Initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < kConvStages; ++s) {
    const auto us = static_cast<std::size_t>(s);
    auto &wt = params_[idx_.conv_w[us]].value;
    const double fan_in = wt.shape[1] * 9.0, fan_out = wt.shape[0] * 9.0;
    FillUniform(&wt.data, std::sqrt(6.0 / (fan_in + fan_out)), &rng);
    std::fill(params_[idx_.conv_b[us]].value.data.begin(), params_[idx_.conv_b[us]].value.data.end(), T(0));
    std::fill(params_[idx_.bn_gamma[us]].value.data.begin(), params_[idx_.bn_gamma[us]].value.data.end(), T(1));
    std::fill(params_[idx_.bn_beta[us]].value.data.begin(), params_[idx_.bn_beta[us]].value.data.end(), T(0));
    std::fill(params_[idx_.bn_mean[us]].value.data.begin(), params_[idx_.bn_mean[us]].value.data.end(), T(0));
    std::fill(params_[idx_.bn_var[us]].value.data.begin(), params_[idx_.bn_var[us]].value.data.end(), T(1));
  }
  auto &fc = params_[idx_.fc_w].value;
  FillUniform(&fc.data, std::sqrt(6.0 / (fc.shape[0] + fc.shape[1])), &rng);
  std::fill(params_[idx_.fc_b].value.data.begin(), params_[idx_.fc_b].value.data.end(), T(0));
  const double lim = 1.0 / std::sqrt(static_cast<double>(cfg_.lstm_hidden));
  for (int d = 0; d < 2; ++d) {
    const auto ud = static_cast<std::size_t>(d);
    FillUniform(&params_[idx_.lstm_W[ud]].value.data, lim, &rng);
    FillUniform(&params_[idx_.lstm_U[ud]].value.data, lim, &rng);
    auto &b = params_[idx_.lstm_b[ud]].value.data;
    std::fill(b.begin(), b.end(), T(0));
    for (int j = 0; j < cfg_.lstm_hidden; ++j) b[static_cast<std::size_t>(cfg_.lstm_hidden + j)] = T(1);
  }
  auto &head = params_[idx_.head_w].value;
  FillUniform(&head.data, std::sqrt(6.0 / (head.shape[0] + head.shape[1])), &rng);
  params_[idx_.head_b].value.data[0] = static_cast<T>(kHeadBiasInit);
  ZeroGrad();
}

template <typename T>
Parameter<T> *Model<T>::Find(std::string_view name) {
  for (auto &p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
const Parameter<T> *Model<T>::Find(std::string_view name) const {
  for (const auto &p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
void Model<T>::ZeroGrad() {
  for (auto &p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), T(0));
}

template <typename T>
LstmWeights<T> Model<T>::Lstm(int dir) const {
  const auto d = static_cast<std::size_t>(dir);
  return LstmWeights<T>{Value(idx_.lstm_W[d]), Value(idx_.lstm_U[d]), Value(idx_.lstm_b[d]),
                        cfg_.feature_dim, cfg_.lstm_hidden};
}

template <typename T>
std::vector<T> Model<T>::Forward(SegmentBatch batch, Mode mode, double dropout_rate,
                                 std::uint64_t dropout_seed, ForwardCache<T> *cache) const {
  if (batch.empty()) Fail(ErrorKind::kShape, "empty batch");
  const int B = static_cast<int>(batch.size());
  const int S = batch[0]->n_seg;
  for (const MelSegments *m : batch) {
    if (m->n_seg != S || S < 1)
      Fail(ErrorKind::kShape, "all clips in a batch need the same non-zero segment count");
    if (m->n_mels != cfg_.n_mels || m->width != cfg_.segment_width)
      Fail(ErrorKind::kShape, "segment patch " + ShapeString({m->n_mels, m->width}) +
                                  " does not match model input " +
                                  ShapeString({cfg_.n_mels, cfg_.segment_width}));
  }
  const int N = B * S;
  cache->mode = mode;
  cache->batch = B;
  cache->steps = S;
  cache->shapes.clear();

  Activation<T> x(N, 1, cfg_.n_mels, cfg_.segment_width);
  for (int b = 0; b < B; ++b) {
    const auto &src = batch[static_cast<std::size_t>(b)]->data;
    std::transform(src.begin(), src.end(), x.item(b * S), [](float v) { return static_cast<T>(v); });
  }
  cache->shapes.push_back({"input", x.dims()});

  std::mt19937_64 rng(dropout_seed);
  int pool_no = 0;
  for (int s = 0; s < kConvStages; ++s) {
    const auto us = static_cast<std::size_t>(s);
    auto &st = cache->stages[us];
    const ConvSpec spec = StageSpec(cfg_, s);
    Activation<T> conv = Conv2dForward<T>(x, Value(idx_.conv_w[us]), Value(idx_.conv_b[us]), spec);
    st.input = std::move(x);
    cache->shapes.push_back({"conv" + std::to_string(s + 1), conv.dims()});
    Activation<T> act;
    if (mode == Mode::kTrain) {
      st.running_mean.assign(Value(idx_.bn_mean[us]).begin(), Value(idx_.bn_mean[us]).end());
      st.running_var.assign(Value(idx_.bn_var[us]).begin(), Value(idx_.bn_var[us]).end());
      act = BatchNormTrain<T>(conv, Value(idx_.bn_gamma[us]), Value(idx_.bn_beta[us]),
                              st.running_mean, st.running_var, &st.bn);
    } else {
      act = BatchNormEval<T>(conv, Value(idx_.bn_gamma[us]), Value(idx_.bn_beta[us]),
                             Value(idx_.bn_mean[us]), Value(idx_.bn_var[us]), &st.bn);
    }
    ReluInPlace(&act.data);
    if (kPool[s]) {
      PoolResult<T> pooled = MaxPool2Forward(act);
      st.argmax = std::move(pooled.argmax);
      x = std::move(pooled.out);
      cache->shapes.push_back({"pool" + std::to_string(++pool_no), x.dims()});
    } else {
      x = act;
    }
    st.activated = std::move(act);
    st.dropout_mask.clear();
    if (kDropout[s] && mode == Mode::kTrain && dropout_rate > 0.0) {
      st.dropout_mask = DropoutMask<T>(x.data.size(), dropout_rate, &rng);
      for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] *= st.dropout_mask[i];
    }
  }

  const int flat = static_cast<int>(x.per_item());
  const int F = cfg_.feature_dim;
  cache->features.assign(static_cast<std::size_t>(N) * F, T(0));
  {
    ConstMatMap<T> xin(x.data.data(), N, flat);
    ConstMatMap<T> wfc(Value(idx_.fc_w).data(), F, flat);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bfc(Value(idx_.fc_b).data(), F);
    MatMap<T> feat(cache->features.data(), N, F);
    feat.noalias() = xin * wfc.transpose();
    feat.rowwise() += bfc;
  }
  cache->cnn_out = std::move(x);
  cache->shapes.push_back({"fc", {N, F}});

  const int H = cfg_.lstm_hidden;
  std::vector<T> out_f = LstmForward<T>(cache->features, B, S, Lstm(0), false, &cache->lstm[0]);
  std::vector<T> out_b = LstmForward<T>(cache->features, B, S, Lstm(1), true, &cache->lstm[1]);
  cache->shapes.push_back({"bilstm", {B, S, 2 * H}});

  cache->head_in.assign(static_cast<std::size_t>(B) * 2 * H, T(0));
  std::vector<T> pred(static_cast<std::size_t>(B));
  const auto head_w = Value(idx_.head_w);
  const T head_b = Value(idx_.head_b)[0];
  for (int b = 0; b < B; ++b) {
    T *hin = cache->head_in.data() + static_cast<std::size_t>(b) * 2 * H;
    const std::size_t last = (static_cast<std::size_t>(b) * S + (S - 1)) * H;
    std::copy_n(out_f.data() + last, H, hin);
    std::copy_n(out_b.data() + last, H, hin + H);
    T acc = head_b;
    for (int j = 0; j < 2 * H; ++j) acc += head_w[static_cast<std::size_t>(j)] * hin[j];
    pred[static_cast<std::size_t>(b)] = acc;
  }
  cache->shapes.push_back({"head", {B, 1}});
  return pred;
}

template <typename T>
std::vector<T> Model<T>::ForwardEval(SegmentBatch batch, ForwardCache<T> *cache) const {
  ForwardCache<T> local;
  return Forward(batch, Mode::kEval, 0.0, 0, cache ? cache : &local);
}

template <typename T>
std::vector<T> Model<T>::ForwardTrain(SegmentBatch batch, double dropout_rate,
                                      std::uint64_t dropout_seed, ForwardCache<T> *cache) {
  std::vector<T> pred = Forward(batch, Mode::kTrain, dropout_rate, dropout_seed, cache);
  for (int s = 0; s < kConvStages; ++s) {
    const auto us = static_cast<std::size_t>(s);
    params_[idx_.bn_mean[us]].value.data = cache->stages[us].running_mean;
    params_[idx_.bn_var[us]].value.data = cache->stages[us].running_var;
  }
  return pred;
}

template <typename T>
void Model<T>::Backward(const ForwardCache<T> &cache, std::span<const T> dpred) {
  const int B = cache.batch, S = cache.steps, N = B * S;
  const int H = cfg_.lstm_hidden, F = cfg_.feature_dim;
  if (dpred.size() != static_cast<std::size_t>(B))
    Fail(ErrorKind::kShape, "gradient size does not match batch");

  // Head.
  const auto head_w = Value(idx_.head_w);
  auto dhead_w = Grad(idx_.head_w);
  std::vector<T> dh_f(static_cast<std::size_t>(B) * S * H, T(0));
  std::vector<T> dh_b(dh_f.size(), T(0));
  for (int b = 0; b < B; ++b) {
    const T g = dpred[static_cast<std::size_t>(b)];
    const T *hin = cache.head_in.data() + static_cast<std::size_t>(b) * 2 * H;
    for (int j = 0; j < 2 * H; ++j) dhead_w[static_cast<std::size_t>(j)] += g * hin[j];
    Grad(idx_.head_b)[0] += g;
    const std::size_t last = (static_cast<std::size_t>(b) * S + (S - 1)) * H;
    for (int j = 0; j < H; ++j) {
      dh_f[last + static_cast<std::size_t>(j)] = g * head_w[static_cast<std::size_t>(j)];
      dh_b[last + static_cast<std::size_t>(j)] = g * head_w[static_cast<std::size_t>(H + j)];
    }
  }

  // BiLSTM.
  std::vector<T> dfeat(static_cast<std::size_t>(N) * F, T(0));
  std::vector<T> dfeat_b(dfeat.size(), T(0));
  LstmBackward<T>(cache.lstm[0], dh_f, Lstm(0), Grad(idx_.lstm_W[0]), Grad(idx_.lstm_U[0]),
                  Grad(idx_.lstm_b[0]), dfeat);
  LstmBackward<T>(cache.lstm[1], dh_b, Lstm(1), Grad(idx_.lstm_W[1]), Grad(idx_.lstm_U[1]),
                  Grad(idx_.lstm_b[1]), dfeat_b);
  for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dfeat_b[i];

  // Segment FC.
  const Activation<T> &cnn_out = cache.cnn_out;
  const int flat = static_cast<int>(cnn_out.per_item());
  Activation<T> dx(cnn_out.n, cnn_out.c, cnn_out.h, cnn_out.w);
  {
    ConstMatMap<T> dF(dfeat.data(), N, F);
    ConstMatMap<T> xin(cnn_out.data.data(), N, flat);
    ConstMatMap<T> wfc(Value(idx_.fc_w).data(), F, flat);
    MatMap<T> dwfc(Grad(idx_.fc_w).data(), F, flat);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbfc(Grad(idx_.fc_b).data(), F);
    dwfc.noalias() += dF.transpose() * xin;
    dbfc += dF.colwise().sum();
    MatMap<T> dxm(dx.data.data(), N, flat);
    dxm.noalias() = dF * wfc;
  }

  // Conv stages, last to first.
  for (int s = kConvStages - 1; s >= 0; --s) {
    const auto us = static_cast<std::size_t>(s);
    const auto &st = cache.stages[us];
    if (!st.dropout_mask.empty())
      for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= st.dropout_mask[i];
    if (kPool[s]) dx = MaxPool2Backward<T>(dx, st.argmax, st.activated.h, st.activated.w);
    ReluBackwardInPlace(st.activated.data, &dx.data);
    Activation<T> dconv = BatchNormBackward<T>(dx, Value(idx_.bn_gamma[us]), st.bn, cache.mode,
                                               Grad(idx_.bn_gamma[us]), Grad(idx_.bn_beta[us]));
    const ConvSpec spec = StageSpec(cfg_, s);
    Activation<T> din;
    Conv2dBackward<T>(st.input, dconv, Value(idx_.conv_w[us]), spec, Grad(idx_.conv_w[us]),
                      Grad(idx_.conv_b[us]), s > 0 ? &din : nullptr);
    dx = std::move(din);
  }
}

template <typename T>
T Model<T>::Predict(const MelSegments &segments) const {
  const MelSegments *one[1] = {&segments};
  const T raw = ForwardEval(one)[0];
  return std::clamp(raw, T(1), T(5));
}

template class Model<float>;
template class Model<double>;

}  // namespace sqm::nn
