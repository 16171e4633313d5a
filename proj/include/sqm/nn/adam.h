// sqm/nn/adam.h

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

#ifndef SQM_NN_ADAM_H_
#define SQM_NN_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sqm/nn/model.h"

namespace sqm::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moments for every trainable parameter, in model order.
template <typename T>
struct OptimizerState {
  AdamConfig cfg;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m, v;
};

template <typename T>
OptimizerState<T> MakeOptimizer(const Model<T> &model, const AdamConfig &cfg = {});

// One bias-corrected Adam update of a single tensor; `step` is the 1-based
// index of this update.
template <typename T>
void AdamUpdate(const AdamConfig &cfg, std::int64_t step, std::span<T> param,
                std::span<const T> grad, std::span<T> m, std::span<T> v);

// Advances the step counter and updates every trainable parameter from its
// accumulated gradient.
template <typename T>
void AdamStep(Model<T> *model, OptimizerState<T> *opt);

}  // namespace sqm::nn

#endif  // SQM_NN_ADAM_H_
