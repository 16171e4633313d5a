// src/nn/train.cc

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

#include "sqm/nn/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "sqm/error.h"
#include "sqm/eval.h"
#include "sqm/random.h"

namespace sqm::nn {

void TrainConfig::Validate() const {
  if (!(lr >= 0.0)) Fail(ErrorKind::kInvalidArgument, "learning rate must be >= 0");
  if (batch_size < 1) Fail(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  if (max_epochs < 1) Fail(ErrorKind::kInvalidArgument, "max_epochs must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    Fail(ErrorKind::kInvalidArgument, "dropout rate must lie in [0, 1)");
}

template <typename T>
T TrainStep(Model<T> *model, OptimizerState<T> *opt, std::span<const TrainSample> batch,
            const TrainConfig &cfg, std::uint64_t dropout_seed) {
  if (batch.empty()) Fail(ErrorKind::kInvalidArgument, "empty training batch");
  std::vector<const MelSegments *> inputs;
  inputs.reserve(batch.size());
  for (const auto &s : batch) inputs.push_back(s.segments);

  ForwardCache<T> cache;
  const std::vector<T> pred = model->ForwardTrain(inputs, cfg.dropout_rate, dropout_seed, &cache);
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<T> dpred(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double err = static_cast<double>(pred[b]) - batch[b].mos;
    loss += err * err;
    dpred[b] = static_cast<T>(2.0 * err / n);
  }
  loss /= n;
  if (!std::isfinite(loss))
    Fail(ErrorKind::kDivergence, "non-finite training loss at step " + std::to_string(opt->step + 1));

  model->ZeroGrad();
  model->Backward(cache, dpred);
  opt->cfg.lr = cfg.lr;
  AdamStep(model, opt);
  return static_cast<T>(loss);
}

template float TrainStep(Model<float> *, OptimizerState<float> *, std::span<const TrainSample>,
                         const TrainConfig &, std::uint64_t);
template double TrainStep(Model<double> *, OptimizerState<double> *,
                          std::span<const TrainSample>, const TrainConfig &, std::uint64_t);

std::vector<double> PredictAll(const Model<float> &model, std::span<const TrainSample> data,
                               int batch_size) {
  std::vector<double> out;
  out.reserve(data.size());
  std::vector<const MelSegments *> group;
  auto flush = [&] {
    if (group.empty()) return;
    for (float p : model.ForwardEval(group)) out.push_back(std::clamp(static_cast<double>(p), 1.0, 5.0));
    group.clear();
  };
  for (const auto &s : data) {
    if (!group.empty() &&
        (group.front()->n_seg != s.segments->n_seg || static_cast<int>(group.size()) >= batch_size))
      flush();
    group.push_back(s.segments);
  }
  flush();
  return out;
}

TrainResult TrainModel(Model<float> *model, std::span<const TrainSample> train,
                       std::span<const TrainSample> val, const TrainConfig &cfg,
                       const std::function<void(const EpochLog &)> &on_epoch) {
  cfg.Validate();
  if (train.empty()) Fail(ErrorKind::kInsufficientData, "empty training set");
  model->Initialize(MixSeed(cfg.seed, {0x1417}));
  OptimizerState<float> opt = MakeOptimizer(*model, AdamConfig{cfg.lr});

  std::vector<double> val_mos;
  for (const auto &s : val) val_mos.push_back(s.mos);

  TrainResult result;
  result.best_val_rmse = std::numeric_limits<double>::infinity();
  std::vector<Parameter<float>> best_params;
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::vector<TrainSample> batch;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(MixSeed(cfg.seed, {0xE90C, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    // Clips in one batch must share a segment count.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return train[x].segments->n_seg < train[y].segments->n_seg;
    });

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t i = 0; i < order.size();) {
      const int len = train[order[i]].segments->n_seg;
      std::size_t j = i;
      while (j < order.size() && j - i < static_cast<std::size_t>(cfg.batch_size) &&
             train[order[j]].segments->n_seg == len)
        ++j;
      // A lone single-segment clip would leave batch norm with one sample;
      // fold it into the previous batch of the same length.
      if (j - i == 1 && len == 1 && !ranges.empty() &&
          train[order[ranges.back().first]].segments->n_seg == len)
        ranges.back().second = j;
      else
        ranges.emplace_back(i, j);
      i = j;
    }
    std::shuffle(ranges.begin(), ranges.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t r = 0; r < ranges.size(); ++r) {
      batch.clear();
      for (std::size_t i = ranges[r].first; i < ranges[r].second; ++i) batch.push_back(train[order[i]]);
      const std::uint64_t dseed =
          MixSeed(cfg.seed, {0xD409, static_cast<std::uint64_t>(epoch), r});
      const float loss = TrainStep<float>(model, &opt, batch, cfg, dseed);
      loss_sum += static_cast<double>(loss) * static_cast<double>(batch.size());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_mse = loss_sum / static_cast<double>(train.size());
    log.val_rmse = std::numeric_limits<double>::quiet_NaN();
    log.val_pcc = std::numeric_limits<double>::quiet_NaN();
    if (!val.empty()) {
      const std::vector<double> pred = PredictAll(*model, val);
      log.val_rmse = Rmse(pred, val_mos);
      try {
        log.val_pcc = Pearson(pred, val_mos);
      } catch (const Error &) {
      }
      if (log.val_rmse < result.best_val_rmse) {
        result.best_val_rmse = log.val_rmse;
        result.best_epoch = epoch;
        best_params = model->params();
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (!val.empty() && cfg.patience > 0 && since_best >= cfg.patience) break;
  }
  if (!best_params.empty()) model->params() = std::move(best_params);
  if (val.empty()) result.best_epoch = static_cast<int>(result.log.size());
  result.steps = opt.step;
  return result;
}

void WriteTrainLogCsv(const std::string &path, const std::vector<EpochLog> &log) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out << "epoch,train_mse,val_rmse,val_pcc\n";
  char buf[128];
  for (const auto &e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_mse, e.val_rmse, e.val_pcc);
    out << buf;
  }
}

}  // namespace sqm::nn
