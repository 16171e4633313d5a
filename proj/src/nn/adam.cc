// src/nn/adam.cc

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

#include "sqm/nn/adam.h"

#include <cmath>

#include "sqm/error.h"

namespace sqm::nn {

template <typename T>
OptimizerState<T> MakeOptimizer(const Model<T> &model, const AdamConfig &cfg) {
  OptimizerState<T> opt;
  opt.cfg = cfg;
  for (const auto &p : model.params()) {
    if (!p.trainable) continue;
    opt.m.emplace_back(p.value.size(), T(0));
    opt.v.emplace_back(p.value.size(), T(0));
  }
  return opt;
}

template <typename T>
void AdamUpdate(const AdamConfig &cfg, std::int64_t step, std::span<T> param,
                std::span<const T> grad, std::span<T> m, std::span<T> v) {
  if (param.size() != grad.size() || m.size() != param.size() || v.size() != param.size())
    Fail(ErrorKind::kShape, "Adam state does not match parameter shape");
  if (step < 1) Fail(ErrorKind::kInvalidArgument, "Adam step index starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / c1;
    const double v_hat = vi / c2;
    param[i] = static_cast<T>(param[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

template <typename T>
void AdamStep(Model<T> *model, OptimizerState<T> *opt) {
  ++opt->step;
  std::size_t k = 0;
  for (auto &p : model->params()) {
    if (!p.trainable) continue;
    if (k >= opt->m.size()) Fail(ErrorKind::kShape, "optimizer state has too few tensors");
    AdamUpdate<T>(opt->cfg, opt->step, p.value.data, p.grad.data, opt->m[k], opt->v[k]);
    ++k;
  }
}

template OptimizerState<float> MakeOptimizer(const Model<float> &, const AdamConfig &);
template OptimizerState<double> MakeOptimizer(const Model<double> &, const AdamConfig &);
template void AdamUpdate<float>(const AdamConfig &, std::int64_t, std::span<float>,
                                std::span<const float>, std::span<float>, std::span<float>);
template void AdamUpdate<double>(const AdamConfig &, std::int64_t, std::span<double>,
                                 std::span<const double>, std::span<double>, std::span<double>);
template void AdamStep(Model<float> *, OptimizerState<float> *);
template void AdamStep(Model<double> *, OptimizerState<double> *);

}  // namespace sqm::nn
