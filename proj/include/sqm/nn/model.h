// sqm/nn/model.h

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

#ifndef SQM_NN_MODEL_H_
#define SQM_NN_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqm/dsp.h"
#include "sqm/nn/layers.h"
#include "sqm/nn/tensor.h"

namespace sqm::nn {

inline constexpr int kConvStages = 6;

// Architecture hyper-parameters.  The defaults are the narrowband network:
// six 3x3 conv stages (the last one stride 2 without padding), a 10-dim
// segment embedding, and a 2 x 50 bidirectional LSTM.
struct ModelConfig {
  int n_mels = 32;
  int segment_width = 33;
  std::array<int, kConvStages> conv_channels = {16, 16, 32, 32, 32, 32};
  int feature_dim = 10;
  int lstm_hidden = 50;

  // 8 channels everywhere, hidden 8; used for finite-difference checks.
  static ModelConfig Downsized();
  bool operator==(const ModelConfig &) const = default;
};

struct ShapeRecord {
  std::string layer;
  std::vector<int> shape;
};

template <typename T>
struct ConvStageCache {
  Activation<T> input;
  BatchNormCache<T> bn;
  Activation<T> activated;  // after ReLU, before pooling
  std::vector<std::int32_t> argmax;
  std::vector<T> dropout_mask;  // empty when the stage has no dropout or in eval
  std::vector<T> running_mean, running_var;  // post-update copies (train mode)
};

template <typename T>
struct ForwardCache {
  Mode mode = Mode::kEval;
  int batch = 0;
  int steps = 0;
  std::array<ConvStageCache<T>, kConvStages> stages;
  Activation<T> cnn_out;        // N x C6 x H6 x W6
  std::vector<T> features;      // N x feature_dim == B x T x feature_dim
  std::array<LstmCache<T>, 2> lstm;
  std::vector<T> head_in;       // B x 2H
  std::vector<ShapeRecord> shapes;
};

// A batch is a list of clips with equal segment counts.
using SegmentBatch = std::span<const MelSegments *const>;

template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig &cfg = {});

  // Glorot-uniform conv/FC weights, LSTM gate matrices in +-1/sqrt(H),
  // forget-gate bias 1, head bias 3 (mid-scale), BN gamma 1 / beta 0.
  void Initialize(std::uint64_t seed);

  const ModelConfig &config() const { return cfg_; }
  std::vector<Parameter<T>> &params() { return params_; }
  const std::vector<Parameter<T>> &params() const { return params_; }
  Parameter<T> *Find(std::string_view name);
  const Parameter<T> *Find(std::string_view name) const;
  void ZeroGrad();

  // Raw (unclamped) outputs, one per clip.  Pure function of the parameters.
  std::vector<T> ForwardEval(SegmentBatch batch, ForwardCache<T> *cache = nullptr) const;

  // Batch statistics, dropout from `dropout_seed`; running statistics are
  // updated.  Fills `cache` for Backward.
  std::vector<T> ForwardTrain(SegmentBatch batch, double dropout_rate,
                              std::uint64_t dropout_seed, ForwardCache<T> *cache);

  // Accumulates parameter gradients of sum_b dpred[b] * pred[b].
  void Backward(const ForwardCache<T> &cache, std::span<const T> dpred);

  // Eval-mode MOS for one clip, clamped to [1, 5].
  T Predict(const MelSegments &segments) const;

  template <typename U>
  Model<U> Cast() const {
    Model<U> out(cfg_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto &src = params_[i].value.data;
      auto &dst = out.params()[i].value.data;
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
    }
    return out;
  }

 private:
  struct Index {
    std::array<std::size_t, kConvStages> conv_w, conv_b, bn_gamma, bn_beta, bn_mean, bn_var;
    std::size_t fc_w, fc_b;
    std::array<std::size_t, 2> lstm_W, lstm_U, lstm_b;
    std::size_t head_w, head_b;
  };

  std::vector<T> Forward(SegmentBatch batch, Mode mode, double dropout_rate,
                         std::uint64_t dropout_seed, ForwardCache<T> *cache) const;
  std::span<const T> Value(std::size_t i) const { return params_[i].value.data; }
  std::span<T> Grad(std::size_t i) { return params_[i].grad.data; }
  LstmWeights<T> Lstm(int dir) const;

  ModelConfig cfg_;
  std::vector<Parameter<T>> params_;
  Index idx_{};
};

// Stage layout shared by forward, backward and the shape checks.
ConvSpec StageSpec(const ModelConfig &cfg, int stage);
bool StageHasPool(int stage);
bool StageHasDropout(int stage);
// Expected intermediate shapes for `batch` clips of `steps` segments each, in
// the order the forward pass records them.
std::vector<ShapeRecord> ExpectedShapes(const ModelConfig &cfg, int batch, int steps);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace sqm::nn

#endif  // SQM_NN_MODEL_H_
