// sqm/harness.h

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

#ifndef SQM_HARNESS_H_
#define SQM_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqm/dataprep.h"
#include "sqm/dsp.h"
#include "sqm/eval.h"
#include "sqm/nn/model.h"
#include "sqm/nn/train.h"
#include "sqm/synthetic.h"

namespace sqm {

enum class ExperimentKind { kRatingsSweep, kSizeSweep, kGroupMatrix, kCropping };

const char *ExperimentKindName(ExperimentKind k);
ExperimentKind ParseExperimentKind(const std::string &name);

struct GroupSpec {
  int n_files = 0;
  int n_ratings = 0;
};

struct CroppingSpec {
  int pairs = 15;
  double mos_shift = 0.0;  // true MOS of the cropped member is lowered by this
  double rater_sd = 0.8;
  int n_ratings = 8;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSizeSweep;
  int repeats = 6;
  int ratings_lo = 1;
  int ratings_hi = 8;
  // Overrides [ratings_lo, ratings_hi] when non-empty.
  std::vector<int> ratings_grid;
  // Training files used by the ratings sweep; 0 means all.
  int ratings_train_size = 0;
  std::vector<int> size_grid;
  std::vector<GroupSpec> groups;
  std::uint64_t base_seed = 0;
  nn::TrainConfig train_cfg;
  nn::ModelConfig model_cfg;
  CroppingSpec cropping;

  // Data source: a synthetic corpus, or manifest + ratings files.
  std::optional<SyntheticConfig> synthetic;
  int n_val_speakers = 10;
  std::string manifest_path;
  std::string ratings_path;
  std::string output_path;
  int threads = 0;  // 0: SQM_THREADS

  // Throws kInvalidArgument on a non-positive repeat count or an empty grid.
  void Validate() const;
  // The ratings grid actually swept.
  std::vector<int> RatingsGrid() const;
};

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json &j);
nlohmann::json ExperimentConfigToJson(const ExperimentConfig &cfg);
ExperimentConfig ReadExperimentConfig(const std::string &path);

struct SweepRow {
  std::string x;  // grid value, or group id "g1".."gN"
  int run = 0;
  double val_pcc = 0.0;  // NaN when undefined
  double val_rmse = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by (grid index, repeat)

  std::string ToCsv() const;
  // Mean validation PCC of the rows with the given x, in grid order.
  std::vector<std::pair<std::string, double>> MeanPccByX() const;
};

void WriteSweepCsv(const std::string &path, const SweepResult &result);

struct RatedClip {
  std::string clip_id;
  std::string speaker_id;
  MelSegments segments;
  RatingRecord ratings;
};

struct ExperimentDataset {
  std::vector<RatedClip> train;
  std::vector<RatedClip> val;  // scored against the mean of all its ratings
};

// Front end over a synthetic corpus, split speaker-disjoint.
ExperimentDataset BuildDataset(const std::vector<SyntheticClip> &corpus, int n_val_speakers,
                               std::uint64_t split_seed, const FrontendConfig &frontend = {});
// Loads audio through the manifest; train and val splits only.
ExperimentDataset LoadDataset(const Manifest &manifest, const std::vector<RatingRecord> &ratings,
                              const FrontendConfig &frontend = {});

// Per-run seed: base mixed with the grid index and repeat.
std::uint64_t DeriveRunSeed(std::uint64_t base, int grid_index, int repeat);
// Seed handed to TrainModel for that run.
std::uint64_t DeriveTrainSeed(std::uint64_t base, int grid_index, int repeat);

struct RunMetrics {
  double val_pcc = 0.0;
  double val_rmse = 0.0;
};

// Fresh model, trained on `train`, scored on `val` after restoring the best
// epoch.
RunMetrics TrainAndScore(const std::vector<nn::TrainSample> &train,
                         const std::vector<nn::TrainSample> &val, const nn::TrainConfig &cfg,
                         const nn::ModelConfig &model_cfg);

SweepResult RunRatingsSweep(const ExperimentConfig &cfg, const ExperimentDataset &data);
SweepResult RunSizeSweep(const ExperimentConfig &cfg, const ExperimentDataset &data);
SweepResult RunGroupMatrix(const ExperimentConfig &cfg, const ExperimentDataset &data);

struct CropPair {
  AudioClip cropped;
  AudioClip uncropped;
  RatingRecord cropped_ratings;
  RatingRecord uncropped_ratings;
};

// Paired t-test of cropped against uncropped scores.  With a null scorer the
// scores are the rating means, otherwise the scorer's predictions.
TTestResult RunCroppingStudy(const std::vector<CropPair> &pairs, const MosPredictor *scorer,
                             const FrontendConfig &frontend = {});

// Synthetic pairs: the cropped member has a 0.5 s interruption and its true
// MOS lowered by spec.mos_shift.
std::vector<CropPair> SynthesizeCropPairs(const CroppingSpec &spec, double clip_seconds,
                                          std::uint64_t seed);

}  // namespace sqm

#endif  // SQM_HARNESS_H_
