// sqm/nn/train.h

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

#ifndef SQM_NN_TRAIN_H_
#define SQM_NN_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sqm/nn/adam.h"
#include "sqm/nn/model.h"

namespace sqm::nn {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 200;
  int max_epochs = 30;
  std::uint64_t seed = 0;
  double dropout_rate = 0.2;
  // Stop after this many epochs without a validation RMSE improvement;
  // <= 0 disables early stopping.
  int patience = 5;

  void Validate() const;
};

struct TrainSample {
  const MelSegments *segments = nullptr;
  double mos = 0.0;
};

// One mini-batch: train-mode forward, MSE loss, full backward pass and an
// Adam update.  Returns the batch loss.  A non-finite loss raises
// kDivergence before any parameter is touched.
template <typename T>
T TrainStep(Model<T> *model, OptimizerState<T> *opt, std::span<const TrainSample> batch,
            const TrainConfig &cfg, std::uint64_t dropout_seed);

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_rmse = 0.0;
  double val_pcc = 0.0;  // NaN when undefined
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_rmse = 0.0;
  std::int64_t steps = 0;
};

// Eval-mode predictions clamped to [1, 5], scored in mini-batches.
std::vector<double> PredictAll(const Model<float> &model, std::span<const TrainSample> data,
                               int batch_size = 32);

// Seeds a fresh model from cfg.seed, trains for up to cfg.max_epochs and, when
// a validation set is given, restores the parameters of the epoch with the
// lowest validation RMSE.  Deterministic for a fixed seed.
TrainResult TrainModel(Model<float> *model, std::span<const TrainSample> train,
                       std::span<const TrainSample> val, const TrainConfig &cfg,
                       const std::function<void(const EpochLog &)> &on_epoch = {});

void WriteTrainLogCsv(const std::string &path, const std::vector<EpochLog> &log);

}  // namespace sqm::nn

#endif  // SQM_NN_TRAIN_H_
