// tools/sqm.cc

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

// Command-line front end.  Exit codes: 0 ok, 1 usage, 2 data error,
// 3 numeric divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>

#include <CLI11.hpp>

#include "sqm/audio.h"
#include "sqm/dataprep.h"
#include "sqm/dsp.h"
#include "sqm/error.h"
#include "sqm/eval.h"
#include "sqm/harness.h"
#include "sqm/nn/checkpoint.h"
#include "sqm/nn/train.h"
#include "sqm/random.h"
#include "sqm/synthetic.h"

namespace {

using namespace sqm;

struct PrepareArgs {
  std::string manifest, ratings, out_dir;
  std::vector<std::string> noise;
  double snr_lo = 0.0, snr_hi = 40.0;
  int n_val_speakers = 0;
  bool extract = false;
  std::uint64_t seed = 0;
};

int Prepare(const PrepareArgs &a) {
  namespace fs = std::filesystem;
  Manifest manifest = ReadManifestCsv(a.manifest);
  const auto records = ReadRatingsCsv(a.ratings);
  std::map<std::string, const RatingRecord *> by_id;
  for (const auto &r : records) by_id[r.clip_id] = &r;

  std::vector<AudioClip> noises;
  for (const auto &p : a.noise) noises.push_back(ResampleTo8k(ReadWavFile(p)));
  const bool rewrite = a.extract || !noises.empty();
  if (rewrite) {
    std::error_code ec;
    fs::create_directories(fs::path(a.out_dir) / "wav", ec);
    if (ec) Fail(ErrorKind::kIo, "cannot create " + a.out_dir + "/wav");
  } else {
    fs::create_directories(a.out_dir);
  }

  std::vector<MosLabel> labels;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    ManifestEntry &e = manifest.entries[i];
    auto it = by_id.find(e.clip_id);
    if (it == by_id.end()) Fail(ErrorKind::kMissingLabel, "no ratings for clip '" + e.clip_id + "'");
    labels.push_back(AggregateMos(*it->second));
    AudioClip clip = ResampleTo8k(ReadWavFile(e.file_path));
    if (!rewrite) continue;
    const std::uint64_t s = MixSeed(a.seed, {i});
    if (a.extract) clip = ExtractClip(clip, MixSeed(s, {1}));
    if (!noises.empty()) {
      std::mt19937_64 rng(MixSeed(s, {2}));
      const auto &noise = noises[std::uniform_int_distribution<std::size_t>(0, noises.size() - 1)(rng)];
      const double snr = std::uniform_real_distribution<double>(a.snr_lo, a.snr_hi)(rng);
      clip = MixNoise(clip, noise, snr, MixSeed(s, {3}));
      e.condition = Condition::kNoisy;
      e.snr_db = clip.snr_db;
    }
    const fs::path out = fs::path(a.out_dir) / "wav" / (e.clip_id + ".wav");
    WriteWavFile(out.string(), clip);
    e.file_path = out.string();
  }
  if (a.n_val_speakers > 0) manifest = SplitBySpeaker(manifest, a.n_val_speakers, a.seed);
  manifest.Validate();
  WriteManifestCsv((fs::path(a.out_dir) / "manifest.csv").string(), manifest);
  WriteLabelsCsv((fs::path(a.out_dir) / "labels.csv").string(), labels);
  std::printf("prepared %zu clips in %s\n", manifest.entries.size(), a.out_dir.c_str());
  return 0;
}

struct SynthArgs {
  SyntheticConfig cfg;
  std::string out_dir;
  int n_val_speakers = 10;
};

int Synth(const SynthArgs &a) {
  const auto corpus = SynthesizeCorpus(a.cfg);
  WriteSyntheticCorpus(a.out_dir, corpus, a.n_val_speakers, a.cfg.seed);
  std::printf("wrote %zu clips to %s\n", corpus.size(), a.out_dir.c_str());
  return 0;
}

struct LoadedSet {
  std::vector<MelSegments> segments;
  std::vector<nn::TrainSample> samples;
};

LoadedSet LoadSplit(const Manifest &manifest, const std::map<std::string, double> &mos, Split split) {
  LoadedSet set;
  const auto entries = manifest.InSplit(split);
  set.segments.reserve(entries.size());
  for (const ManifestEntry *e : entries) {
    auto it = mos.find(e->clip_id);
    if (it == mos.end()) Fail(ErrorKind::kMissingLabel, "no label for clip '" + e->clip_id + "'");
    set.segments.push_back(ComputeSegments(ResampleTo8k(ReadWavFile(e->file_path))));
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    set.samples.push_back({&set.segments[i], mos.at(entries[i]->clip_id)});
  return set;
}

struct TrainArgs {
  std::string manifest, labels, checkpoint, log;
  nn::TrainConfig cfg;
};

int Train(const TrainArgs &a) {
  const Manifest manifest = ReadManifestCsv(a.manifest);
  manifest.Validate();
  std::map<std::string, double> mos;
  for (const auto &l : ReadLabelsCsv(a.labels)) mos[l.clip_id] = l.mos;
  const LoadedSet train = LoadSplit(manifest, mos, Split::kTrain);
  const LoadedSet val = LoadSplit(manifest, mos, Split::kVal);
  nn::Model<float> model;
  const auto result = nn::TrainModel(&model, train.samples, val.samples, a.cfg,
                                     [](const nn::EpochLog &e) {
                                       std::fprintf(stderr, "epoch %d train_mse %.4f val_rmse %.4f val_pcc %.4f\n",
                                                    e.epoch, e.train_mse, e.val_rmse, e.val_pcc);
                                     });
  nn::SaveCheckpointFile(a.checkpoint, model);
  if (!a.log.empty()) nn::WriteTrainLogCsv(a.log, result.log);
  std::printf("trained %lld steps, best epoch %d\n", static_cast<long long>(result.steps),
              result.best_epoch);
  return 0;
}

int Predict(const std::string &checkpoint, const std::string &wav) {
  const auto loaded = nn::LoadCheckpointFile(checkpoint);
  const MelSegments seg = ComputeSegments(ResampleTo8k(ReadWavFile(wav)));
  std::printf("%.2f\n", static_cast<double>(loaded.model.Predict(seg)));
  return 0;
}

struct EvalArgs {
  std::string checkpoint, manifest, labels, report, predictions, split;
  EvaluateOptions options;
};

int Eval(EvalArgs a) {
  const auto loaded = nn::LoadCheckpointFile(a.checkpoint);
  if (!a.split.empty()) a.options.split = ParseSplit(a.split);
  a.options.threads = ThreadsFromEnv();
  const ModelPredictor predictor(loaded.model);
  const EvalReport report =
      Evaluate(predictor, ReadManifestCsv(a.manifest), ReadLabelsCsv(a.labels), a.options);
  WriteReportJson(a.report, report);
  if (!a.predictions.empty()) WritePredictionsCsv(a.predictions, report);
  std::printf("n %d pcc %s rmse %.4f\n", report.n,
              report.pcc ? std::to_string(*report.pcc).c_str() : "null", report.rmse);
  return 0;
}

int Experiment(const std::string &config_path) {
  const ExperimentConfig cfg = ReadExperimentConfig(config_path);
  if (cfg.kind == ExperimentKind::kCropping) {
    const double seconds = cfg.synthetic ? cfg.synthetic->clip_seconds : 4.0;
    const auto pairs = SynthesizeCropPairs(cfg.cropping, seconds, cfg.base_seed);
    const TTestResult t = RunCroppingStudy(pairs, nullptr);
    nlohmann::json j = {{"t", t.t}, {"df", t.df}, {"p_two_tailed", t.p_two_tailed},
                        {"mean_diff", t.mean_diff}};
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
  }
  ExperimentDataset data;
  if (cfg.synthetic) {
    data = BuildDataset(SynthesizeCorpus(*cfg.synthetic), cfg.n_val_speakers, cfg.synthetic->seed);
  } else {
    if (cfg.manifest_path.empty() || cfg.ratings_path.empty())
      Fail(ErrorKind::kInvalidArgument, "config needs 'synthetic' or both 'manifest' and 'ratings'");
    data = LoadDataset(ReadManifestCsv(cfg.manifest_path), ReadRatingsCsv(cfg.ratings_path));
  }
  SweepResult result;
  switch (cfg.kind) {
    case ExperimentKind::kRatingsSweep: result = RunRatingsSweep(cfg, data); break;
    case ExperimentKind::kSizeSweep: result = RunSizeSweep(cfg, data); break;
    case ExperimentKind::kGroupMatrix: result = RunGroupMatrix(cfg, data); break;
    case ExperimentKind::kCropping: break;
  }
  if (cfg.output_path.empty())
    std::cout << result.ToCsv();
  else
    WriteSweepCsv(cfg.output_path, result);
  for (const auto &[x, pcc] : result.MeanPccByX())
    std::fprintf(stderr, "x %s mean_pcc %.4f\n", x.c_str(), pcc);
  return 0;
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDivergence: return 3;
    case ErrorKind::kInvalidArgument: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Narrowband speech quality (MOS) prediction toolkit"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto *c_prep = app.add_subcommand("prepare", "Build manifest and labels from audio and ratings CSVs");
  c_prep->add_option("--manifest", prep.manifest, "Input manifest CSV")->required();
  c_prep->add_option("--ratings", prep.ratings, "Ratings CSV (clip_id,rating)")->required();
  c_prep->add_option("--out-dir", prep.out_dir, "Output directory")->required();
  c_prep->add_option("--noise", prep.noise, "Noise WAV files to mix in");
  c_prep->add_option("--snr-lo", prep.snr_lo, "Lowest mixing SNR (dB)");
  c_prep->add_option("--snr-hi", prep.snr_hi, "Highest mixing SNR (dB)");
  c_prep->add_flag("--extract", prep.extract, "Cut 10 s active clips");
  c_prep->add_option("--val-speakers", prep.n_val_speakers, "Speakers moved to validation");
  c_prep->add_option("--seed", prep.seed, "Random seed");

  SynthArgs syn;
  auto *c_syn = app.add_subcommand("synth", "Write a synthetic rated corpus");
  c_syn->add_option("--out-dir", syn.out_dir, "Output directory")->required();
  c_syn->add_option("--speakers", syn.cfg.n_speakers, "Number of speakers");
  c_syn->add_option("--clips", syn.cfg.clips_per_speaker, "Clips per speaker");
  c_syn->add_option("--seconds", syn.cfg.clip_seconds, "Clip duration");
  c_syn->add_option("--ratings", syn.cfg.n_ratings, "Ratings per clip");
  c_syn->add_option("--rater-sd", syn.cfg.rater_sd, "Rater noise standard deviation");
  c_syn->add_option("--val-speakers", syn.n_val_speakers, "Speakers moved to validation");
  c_syn->add_option("--seed", syn.cfg.seed, "Random seed");

  TrainArgs tr;
  auto *c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--manifest", tr.manifest, "Manifest CSV")->required();
  c_train->add_option("--labels", tr.labels, "Labels CSV")->required();
  c_train->add_option("--out-checkpoint", tr.checkpoint, "Checkpoint to write")->required();
  c_train->add_option("--lr", tr.cfg.lr, "Learning rate")->capture_default_str();
  c_train->add_option("--batch", tr.cfg.batch_size, "Clips per mini-batch")->capture_default_str();
  c_train->add_option("--epochs", tr.cfg.max_epochs, "Maximum epochs")->capture_default_str();
  c_train->add_option("--patience", tr.cfg.patience, "Early-stopping patience (0 disables)")
      ->capture_default_str();
  c_train->add_option("--dropout", tr.cfg.dropout_rate, "Dropout rate")->capture_default_str();
  c_train->add_option("--seed", tr.cfg.seed, "Random seed");
  c_train->add_option("--log", tr.log, "Training log CSV");

  std::string p_ckpt, p_wav;
  auto *c_pred = app.add_subcommand("predict", "Print the MOS of one WAV file");
  c_pred->add_option("--checkpoint", p_ckpt, "Checkpoint")->required();
  c_pred->add_option("--wav", p_wav, "WAV file")->required();

  EvalArgs ev;
  auto *c_eval = app.add_subcommand("eval", "Score a labeled manifest");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->required();
  c_eval->add_option("--manifest", ev.manifest, "Manifest CSV")->required();
  c_eval->add_option("--labels", ev.labels, "Labels CSV")->required();
  c_eval->add_option("--report", ev.report, "Report JSON to write")->required();
  c_eval->add_option("--predictions", ev.predictions, "Per-clip CSV to write");
  c_eval->add_option("--split", ev.split, "Restrict to train, val or test");
  c_eval->add_option("--name", ev.options.dataset_name, "Dataset name in the report");
  c_eval->add_flag("--uniform-subset", ev.options.uniform_subset, "Add the bin-uniform subset block");
  c_eval->add_option("--repeats", ev.options.uniform_repeats, "Uniform-subset repeats");
  c_eval->add_flag("--skip-bad", ev.options.skip_bad, "Skip undecodable clips");
  c_eval->add_option("--seed", ev.options.seed, "Random seed");

  std::string x_config;
  auto *c_exp = app.add_subcommand("experiment", "Run a sweep from a JSON config");
  c_exp->add_option("--config", x_config, "Experiment config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "sqm: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*c_prep) return Prepare(prep);
    if (*c_syn) return Synth(syn);
    if (*c_train) {
      tr.cfg.Validate();
      return Train(tr);
    }
    if (*c_pred) return Predict(p_ckpt, p_wav);
    if (*c_eval) return Eval(ev);
    if (*c_exp) return Experiment(x_config);
  } catch (const Error &e) {
    std::cerr << "sqm: " << ErrorKindName(e.kind()) << ": " << e.what() << '\n';
    return ExitCodeFor(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "sqm: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
