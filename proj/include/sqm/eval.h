// sqm/eval.h

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

#ifndef SQM_EVAL_H_
#define SQM_EVAL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqm/dataprep.h"
#include "sqm/dsp.h"
#include "sqm/nn/model.h"

namespace sqm {

// ---- metrics -----------------------------------------------------------------

// Pearson correlation in double precision.  Throws kUndefinedCorrelation for
// a constant argument and kShape for mismatched or too-short inputs.
double Pearson(std::span<const double> x, std::span<const double> y);
double Rmse(std::span<const double> pred, std::span<const double> target);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_tailed = 1.0;
  double mean_diff = 0.0;
};

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double RegularizedIncompleteBeta(double x, double a, double b);
// Two-tailed p-value of Student's t with `df` degrees of freedom.
double StudentTwoTailedP(double t, int df);
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

inline constexpr int kHistogramBins = 8;
// Counts over [1, 5] in 0.5-wide bins; 5.0 lands in the last bin.
std::array<int, kHistogramBins> MosHistogram(std::span<const double> mos);

struct UniformSubsetStats {
  int repeats = 0;
  double mean_pcc = 0.0;
  double sd_pcc = 0.0;
};

// Seed used for repeat `r` of UniformSubsetEval.
std::uint64_t UniformSubsetSeed(std::uint64_t seed, int repeat);

// Average PCC over `repeats` bin-uniform 39-clip subsets.
UniformSubsetStats UniformSubsetEval(const std::map<std::string, double> &preds,
                                     const std::vector<MosLabel> &labels, int repeats,
                                     std::uint64_t rng_seed);

// ---- dataset evaluation -----------------------------------------------------

class MosPredictor {
 public:
  virtual ~MosPredictor() = default;
  // Must be safe to call concurrently.
  virtual double Predict(const std::string &clip_id, const MelSegments &segments) const = 0;
};

// Eval-mode network, clamped to [1, 5].
class ModelPredictor : public MosPredictor {
 public:
  explicit ModelPredictor(const nn::Model<float> &model) : model_(model) {}
  double Predict(const std::string &clip_id, const MelSegments &segments) const override;

 private:
  const nn::Model<float> &model_;
};

struct ClipPrediction {
  std::string clip_id;
  double mos = 0.0;
  double prediction = 0.0;
};

struct EvalReport {
  std::string dataset_name;
  int n = 0;
  std::optional<double> pcc;
  std::string pcc_error;  // set when pcc is undefined
  double rmse = 0.0;
  std::array<int, kHistogramBins> mos_histogram{};
  std::optional<UniformSubsetStats> uniform_subset;
  std::vector<ClipPrediction> clips;   // sorted by clip_id
  std::vector<std::string> failures;   // "clip_id: reason" for skipped clips
};

struct EvaluateOptions {
  std::string dataset_name = "dataset";
  std::optional<Split> split;   // restrict to one split
  bool skip_bad = false;
  bool uniform_subset = false;
  int uniform_repeats = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  FrontendConfig frontend;
};

// Loads, canonicalizes and scores every manifest entry.
EvalReport Evaluate(const MosPredictor &predictor, const Manifest &manifest,
                    const std::vector<MosLabel> &labels, const EvaluateOptions &options);

// Metric assembly over already-scored clips (shared with Evaluate).
EvalReport BuildReport(std::string dataset_name, std::vector<ClipPrediction> clips,
                       const EvaluateOptions &options);

nlohmann::json ReportToJson(const EvalReport &report);
void WriteReportJson(const std::string &path, const EvalReport &report);
void WritePredictionsCsv(const std::string &path, const EvalReport &report);

// SQM_THREADS, clamped to >= 1; defaults to 1.
int ThreadsFromEnv();

}  // namespace sqm

#endif  // SQM_EVAL_H_
