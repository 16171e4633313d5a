// sqm/nn/layers.h

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

#ifndef SQM_NN_LAYERS_H_
#define SQM_NN_LAYERS_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sqm/nn/tensor.h"

namespace sqm::nn {

enum class Mode { kTrain, kEval };

struct ConvSpec {
  int c_out = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
};

// floor((in + 2*pad - kernel) / stride) + 1; 0 when the kernel does not fit.
int ConvOutSize(int in, int kernel, int stride, int pad);

// Cross-correlation with zero padding.  weight is c_out x c_in x k x k.
template <typename T>
Activation<T> Conv2dForward(const Activation<T> &in, std::span<const T> weight,
                            std::span<const T> bias, const ConvSpec &spec);

// Accumulates into dweight/dbias.  din may be null when the input gradient is
// not needed.
template <typename T>
void Conv2dBackward(const Activation<T> &in, const Activation<T> &dout,
                    std::span<const T> weight, const ConvSpec &spec,
                    std::span<T> dweight, std::span<T> dbias, Activation<T> *din);

template <typename T>
struct PoolResult {
  Activation<T> out;
  std::vector<std::int32_t> argmax;  // flat input offset per output element
};

// 2x2 max pooling, stride 2.  A trailing odd row/column is dropped.
template <typename T>
PoolResult<T> MaxPool2Forward(const Activation<T> &in);
template <typename T>
Activation<T> MaxPool2Backward(const Activation<T> &dout, std::span<const std::int32_t> argmax,
                               int in_h, int in_w);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormCache {
  std::vector<T> xhat;
  std::vector<T> inv_std;  // per channel
};

// Normalizes with batch statistics over N x H x W and folds them into the
// running estimates (momentum 0.1, unbiased variance).
template <typename T>
Activation<T> BatchNormTrain(const Activation<T> &in, std::span<const T> gamma,
                             std::span<const T> beta, std::span<T> running_mean,
                             std::span<T> running_var, BatchNormCache<T> *cache);

template <typename T>
Activation<T> BatchNormEval(const Activation<T> &in, std::span<const T> gamma,
                            std::span<const T> beta, std::span<const T> running_mean,
                            std::span<const T> running_var, BatchNormCache<T> *cache);

template <typename T>
Activation<T> BatchNormBackward(const Activation<T> &dout, std::span<const T> gamma,
                                const BatchNormCache<T> &cache, Mode mode,
                                std::span<T> dgamma, std::span<T> dbeta);

template <typename T>
void ReluInPlace(std::vector<T> *x);
// dx = dy where the forward output was positive.
template <typename T>
void ReluBackwardInPlace(const std::vector<T> &out, std::vector<T> *grad);

// Inverted dropout: entries are 0 or 1/(1-rate).
template <typename T>
std::vector<T> DropoutMask(std::size_t n, double rate, std::mt19937_64 *rng);

// Gate order i, f, g, o.  W is 4H x I, U is 4H x H, b is 4H.
template <typename T>
struct LstmWeights {
  std::span<const T> W, U, b;
  int input = 0;
  int hidden = 0;
};

template <typename T>
struct LstmCache {
  int batch = 0, steps = 0;
  bool reverse = false;
  std::vector<T> inputs;  // B x T x I, original order
  // Per processed step s (0 = first processed), B x 4H / B x H.
  std::vector<T> gates, cells, tanh_cells, hidden;
};

// Returns B x T x H hidden states in original time order.  With `reverse`
// the sequence is processed back to front.  Zero initial state.
template <typename T>
std::vector<T> LstmForward(std::span<const T> inputs, int batch, int steps,
                           const LstmWeights<T> &w, bool reverse, LstmCache<T> *cache);

// dh is B x T x H in original order.  Accumulates weight gradients and
// writes the input gradient (B x T x I) into dinputs when non-empty.
template <typename T>
void LstmBackward(const LstmCache<T> &cache, std::span<const T> dh, const LstmWeights<T> &w,
                  std::span<T> dW, std::span<T> dU, std::span<T> db, std::span<T> dinputs);

}  // namespace sqm::nn

#endif  // SQM_NN_LAYERS_H_
