// sqm/nn/checkpoint.h

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

#ifndef SQM_NN_CHECKPOINT_H_
#define SQM_NN_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqm/nn/adam.h"
#include "sqm/nn/model.h"

namespace sqm::nn {

// Binary layout, little-endian throughout:
//   "PSQM"  u32 version (=1)  u32 tensor_count
//   per tensor: u16 name_len, name bytes (UTF-8), u8 ndim, ndim x u32 dims,
//               prod(dims) x f32
// Model tensors use the parameter names of Model<float>.  Optimizer state,
// when present, adds "adam.config" [lr, beta1, beta2, eps], "adam.step" and
// "adam.m.<name>" / "adam.v.<name>" per trainable parameter.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> SaveCheckpoint(const Model<float> &model,
                                         const OptimizerState<float> *opt = nullptr);

struct LoadedCheckpoint {
  Model<float> model;
  std::optional<OptimizerState<float>> opt;
};

// Throws kFormat on framing errors and kIncompatibleCheckpoint when a tensor
// the architecture needs is missing, unexpected, or mis-shaped.
LoadedCheckpoint LoadCheckpoint(std::span<const std::uint8_t> bytes,
                                const ModelConfig &cfg = {});

void SaveCheckpointFile(const std::string &path, const Model<float> &model,
                        const OptimizerState<float> *opt = nullptr);
LoadedCheckpoint LoadCheckpointFile(const std::string &path, const ModelConfig &cfg = {});

}  // namespace sqm::nn

#endif  // SQM_NN_CHECKPOINT_H_
