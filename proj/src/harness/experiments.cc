// src/harness/experiments.cc

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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "sqm/error.h"
#include "sqm/harness.h"
#include "sqm/random.h"

namespace sqm {

namespace {

// Runs fn(0..n-1) on up to `threads` workers; rethrows the failure of the
// lowest-indexed job.
template <typename Fn>
void RunJobs(int n, int threads, Fn fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

int Workers(const ExperimentConfig &cfg) {
  return cfg.threads > 0 ? cfg.threads : ThreadsFromEnv();
}

// Sorted indices of a uniform draw of k out of n.
std::vector<std::size_t> DrawSubset(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<nn::TrainSample> ValSamples(const ExperimentDataset &data) {
  std::vector<nn::TrainSample> val;
  for (const auto &c : data.val) val.push_back({&c.segments, AggregateMos(c.ratings).mos});
  return val;
}

// Training samples for the chosen files; k == 0 keeps every rating.
std::vector<nn::TrainSample> TrainSamples(const ExperimentDataset &data,
                                          const std::vector<std::size_t> &files, int k,
                                          std::uint64_t ratings_seed) {
  std::vector<nn::TrainSample> out;
  out.reserve(files.size());
  for (std::size_t i : files) {
    const RatedClip &c = data.train[i];
    const double mos = k == 0 ? AggregateMos(c.ratings).mos
                              : SubsampleRatings(c.ratings, k, MixSeed(ratings_seed, {i})).mos;
    out.push_back({&c.segments, mos});
  }
  return out;
}

void RequireRatings(const ExperimentDataset &data, int k) {
  for (const auto &c : data.train)
    if (static_cast<int>(c.ratings.ratings.size()) < k)
      Fail(ErrorKind::kInsufficientRatings,
           "file '" + c.clip_id + "' has " + std::to_string(c.ratings.ratings.size()) +
               " ratings, " + std::to_string(k) + " needed");
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t DeriveRunSeed(std::uint64_t base, int grid_index, int repeat) {
  return MixSeed(base, {static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(repeat)});
}

std::uint64_t DeriveTrainSeed(std::uint64_t base, int grid_index, int repeat) {
  return MixSeed(DeriveRunSeed(base, grid_index, repeat), {1});
}

RunMetrics TrainAndScore(const std::vector<nn::TrainSample> &train,
                         const std::vector<nn::TrainSample> &val, const nn::TrainConfig &cfg,
                         const nn::ModelConfig &model_cfg) {
  nn::Model<float> model(model_cfg);
  nn::TrainModel(&model, train, val, cfg);
  RunMetrics m;
  m.val_pcc = std::numeric_limits<double>::quiet_NaN();
  if (val.empty()) return m;
  const std::vector<double> pred = nn::PredictAll(model, val);
  std::vector<double> mos;
  for (const auto &s : val) mos.push_back(s.mos);
  m.val_rmse = Rmse(pred, mos);
  try {
    m.val_pcc = Pearson(pred, mos);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kUndefinedCorrelation) throw;
  }
  return m;
}

std::string SweepResult::ToCsv() const {
  std::string out = "x,run,val_pcc,val_rmse\n";
  for (const auto &r : rows)
    out += r.x + ',' + std::to_string(r.run) + ',' + FormatDouble(r.val_pcc) + ',' +
           FormatDouble(r.val_rmse) + '\n';
  return out;
}

std::vector<std::pair<std::string, double>> SweepResult::MeanPccByX() const {
  std::vector<std::pair<std::string, double>> out;
  std::vector<int> counts;
  for (const auto &r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto &p) { return p.first == r.x; });
    if (it == out.end()) {
      out.emplace_back(r.x, 0.0);
      counts.push_back(0);
      it = out.end() - 1;
    }
    it->second += r.val_pcc;
    counts[static_cast<std::size_t>(it - out.begin())]++;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].second /= counts[i];
  return out;
}

void WriteSweepCsv(const std::string &path, const SweepResult &result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out << result.ToCsv();
}

ExperimentDataset BuildDataset(const std::vector<SyntheticClip> &corpus, int n_val_speakers,
                               std::uint64_t split_seed, const FrontendConfig &frontend) {
  Manifest manifest;
  std::map<std::string, const SyntheticClip *> by_id;
  for (const auto &sc : corpus) {
    ManifestEntry e;
    e.clip_id = sc.clip.clip_id;
    e.speaker_id = sc.clip.speaker_id;
    manifest.entries.push_back(e);
    by_id[e.clip_id] = &sc;
  }
  if (n_val_speakers > 0) manifest = SplitBySpeaker(manifest, n_val_speakers, split_seed);
  ExperimentDataset data;
  for (const auto &e : manifest.entries) {
    const SyntheticClip &sc = *by_id.at(e.clip_id);
    RatedClip rc{e.clip_id, e.speaker_id, ComputeSegments(sc.clip, frontend), sc.ratings};
    (e.split == Split::kVal ? data.val : data.train).push_back(std::move(rc));
  }
  return data;
}

ExperimentDataset LoadDataset(const Manifest &manifest, const std::vector<RatingRecord> &ratings,
                              const FrontendConfig &frontend) {
  manifest.Validate();
  std::map<std::string, const RatingRecord *> by_id;
  for (const auto &r : ratings) by_id[r.clip_id] = &r;
  ExperimentDataset data;
  for (const auto &e : manifest.entries) {
    if (e.split == Split::kTest) continue;
    auto it = by_id.find(e.clip_id);
    if (it == by_id.end()) Fail(ErrorKind::kMissingLabel, "no ratings for clip '" + e.clip_id + "'");
    const AudioClip clip = ResampleTo8k(ReadWavFile(e.file_path));
    RatedClip rc{e.clip_id, e.speaker_id, ComputeSegments(clip, frontend), *it->second};
    (e.split == Split::kVal ? data.val : data.train).push_back(std::move(rc));
  }
  return data;
}

SweepResult RunRatingsSweep(const ExperimentConfig &cfg, const ExperimentDataset &data) {
  cfg.Validate();
  const std::vector<int> grid = cfg.RatingsGrid();
  RequireRatings(data, *std::max_element(grid.begin(), grid.end()));
  std::size_t n_files = data.train.size();
  if (cfg.ratings_train_size > 0) {
    if (static_cast<std::size_t>(cfg.ratings_train_size) > n_files)
      Fail(ErrorKind::kInsufficientData, "ratings sweep asks for " +
                                             std::to_string(cfg.ratings_train_size) +
                                             " files, " + std::to_string(n_files) + " available");
    n_files = static_cast<std::size_t>(cfg.ratings_train_size);
  }
  // One file subset shared by every run isolates the effect of the rating count.
  const std::vector<std::size_t> files =
      DrawSubset(data.train.size(), n_files, MixSeed(cfg.base_seed, {0x7A1}));
  const std::vector<nn::TrainSample> val = ValSamples(data);

  SweepResult result;
  result.rows.resize(grid.size() * static_cast<std::size_t>(cfg.repeats));
  RunJobs(static_cast<int>(result.rows.size()), Workers(cfg), [&](int job) {
    const int g = job / cfg.repeats, r = job % cfg.repeats;
    const std::uint64_t run_seed = DeriveRunSeed(cfg.base_seed, g, r);
    nn::TrainConfig tc = cfg.train_cfg;
    tc.seed = DeriveTrainSeed(cfg.base_seed, g, r);
    const auto train = TrainSamples(data, files, grid[static_cast<std::size_t>(g)], MixSeed(run_seed, {3}));
    const RunMetrics m = TrainAndScore(train, val, tc, cfg.model_cfg);
    result.rows[static_cast<std::size_t>(job)] =
        SweepRow{std::to_string(grid[static_cast<std::size_t>(g)]), r, m.val_pcc, m.val_rmse};
  });
  return result;
}

SweepResult RunSizeSweep(const ExperimentConfig &cfg, const ExperimentDataset &data) {
  cfg.Validate();
  const int max_size = *std::max_element(cfg.size_grid.begin(), cfg.size_grid.end());
  if (static_cast<std::size_t>(max_size) > data.train.size())
    Fail(ErrorKind::kInsufficientData, "size grid asks for " + std::to_string(max_size) +
                                           " files, " + std::to_string(data.train.size()) +
                                           " available");
  const std::vector<nn::TrainSample> val = ValSamples(data);
  SweepResult result;
  result.rows.resize(cfg.size_grid.size() * static_cast<std::size_t>(cfg.repeats));
  RunJobs(static_cast<int>(result.rows.size()), Workers(cfg), [&](int job) {
    const int g = job / cfg.repeats, r = job % cfg.repeats;
    const int size = cfg.size_grid[static_cast<std::size_t>(g)];
    const std::uint64_t run_seed = DeriveRunSeed(cfg.base_seed, g, r);
    nn::TrainConfig tc = cfg.train_cfg;
    tc.seed = DeriveTrainSeed(cfg.base_seed, g, r);
    const auto files = DrawSubset(data.train.size(), static_cast<std::size_t>(size), MixSeed(run_seed, {2}));
    const RunMetrics m = TrainAndScore(TrainSamples(data, files, 0, 0), val, tc, cfg.model_cfg);
    result.rows[static_cast<std::size_t>(job)] = SweepRow{std::to_string(size), r, m.val_pcc, m.val_rmse};
  });
  return result;
}

SweepResult RunGroupMatrix(const ExperimentConfig &cfg, const ExperimentDataset &data) {
  cfg.Validate();
  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    const GroupSpec &spec = cfg.groups[g];
    const std::string name = "group g" + std::to_string(g + 1);
    if (spec.n_files < 1 || static_cast<std::size_t>(spec.n_files) > data.train.size())
      Fail(ErrorKind::kInsufficientData, name + " needs " + std::to_string(spec.n_files) +
                                             " files, " + std::to_string(data.train.size()) +
                                             " available");
    for (const auto &c : data.train)
      if (spec.n_ratings < 1 || static_cast<int>(c.ratings.ratings.size()) < spec.n_ratings)
        Fail(ErrorKind::kInsufficientData, name + " needs " + std::to_string(spec.n_ratings) +
                                               " ratings; file '" + c.clip_id + "' has " +
                                               std::to_string(c.ratings.ratings.size()));
  }
  const std::vector<nn::TrainSample> val = ValSamples(data);
  SweepResult result;
  result.rows.resize(cfg.groups.size() * static_cast<std::size_t>(cfg.repeats));
  RunJobs(static_cast<int>(result.rows.size()), Workers(cfg), [&](int job) {
    const int g = job / cfg.repeats, r = job % cfg.repeats;
    const GroupSpec &spec = cfg.groups[static_cast<std::size_t>(g)];
    const std::uint64_t run_seed = DeriveRunSeed(cfg.base_seed, g, r);
    nn::TrainConfig tc = cfg.train_cfg;
    tc.seed = DeriveTrainSeed(cfg.base_seed, g, r);
    const auto files =
        DrawSubset(data.train.size(), static_cast<std::size_t>(spec.n_files), MixSeed(run_seed, {2}));
    const auto train = TrainSamples(data, files, spec.n_ratings, MixSeed(run_seed, {3}));
    const RunMetrics m = TrainAndScore(train, val, tc, cfg.model_cfg);
    result.rows[static_cast<std::size_t>(job)] =
        SweepRow{"g" + std::to_string(g + 1), r, m.val_pcc, m.val_rmse};
  });
  return result;
}

TTestResult RunCroppingStudy(const std::vector<CropPair> &pairs, const MosPredictor *scorer,
                             const FrontendConfig &frontend) {
  if (pairs.size() < 2) Fail(ErrorKind::kShape, "cropping study needs at least two pairs");
  std::vector<double> cropped, uncropped;
  for (const auto &p : pairs) {
    if (scorer) {
      cropped.push_back(scorer->Predict(p.cropped.clip_id, ComputeSegments(p.cropped, frontend)));
      uncropped.push_back(
          scorer->Predict(p.uncropped.clip_id, ComputeSegments(p.uncropped, frontend)));
    } else {
      cropped.push_back(AggregateMos(p.cropped_ratings).mos);
      uncropped.push_back(AggregateMos(p.uncropped_ratings).mos);
    }
  }
  return PairedTTest(cropped, uncropped);
}

std::vector<CropPair> SynthesizeCropPairs(const CroppingSpec &spec, double clip_seconds,
                                          std::uint64_t seed) {
  if (spec.pairs < 1 || spec.n_ratings < 1)
    Fail(ErrorKind::kInvalidArgument, "cropping needs pairs and ratings");
  std::vector<CropPair> out;
  const auto n = static_cast<std::size_t>(std::llround(clip_seconds * kCanonicalRate));
  const auto gap = static_cast<std::size_t>(0.5 * kCanonicalRate);
  if (n <= gap) Fail(ErrorKind::kTooShort, "cropping clips must exceed 0.5 s");
  for (int i = 0; i < spec.pairs; ++i) {
    const std::uint64_t ps = MixSeed(seed, {0xC209, static_cast<std::uint64_t>(i)});
    std::mt19937_64 rng(ps);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double snr = 40.0 * u(rng);
    const auto type = static_cast<NoiseType>(i % kNoiseTypes);
    const AudioClip speech = SynthesizeSpeech(90.0 + 160.0 * u(rng), clip_seconds, MixSeed(ps, {1}));
    CropPair p;
    p.uncropped = MixNoise(speech, SynthesizeNoise(type, n, MixSeed(ps, {2})), snr, MixSeed(ps, {3}));
    p.uncropped.clip_id = "pair" + std::to_string(i) + "_full";
    p.cropped = p.uncropped;
    p.cropped.clip_id = "pair" + std::to_string(i) + "_cropped";
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - gap)(rng);
    std::fill(p.cropped.samples.begin() + static_cast<std::ptrdiff_t>(start),
              p.cropped.samples.begin() + static_cast<std::ptrdiff_t>(start + gap), 0.0f);
    const double mos = SyntheticTrueMos(snr);
    p.uncropped_ratings = SimulateRatings(mos, spec.n_ratings, spec.rater_sd, MixSeed(ps, {4}));
    p.uncropped_ratings.clip_id = p.uncropped.clip_id;
    p.cropped_ratings = SimulateRatings(std::clamp(mos - spec.mos_shift, 1.0, 5.0), spec.n_ratings,
                                        spec.rater_sd, MixSeed(ps, {5}));
    p.cropped_ratings.clip_id = p.cropped.clip_id;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sqm
