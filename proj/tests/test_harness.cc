// tests/test_harness.cc

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

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "sqm/error.h"
#include "sqm/harness.h"
#include "sqm/nn/checkpoint.h"

using namespace sqm;
namespace fs = std::filesystem;

namespace {

ErrorKind KindOf(auto &&fn, std::string *what = nullptr) {
  try {
    fn();
  } catch (const Error &e) {
    if (what) *what = e.what();
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

// Small enough that a training run takes a fraction of a second.
const ExperimentDataset &TinyData() {
  static const ExperimentDataset data = [] {
    SyntheticConfig sc;
    sc.n_speakers = 8;
    sc.clips_per_speaker = 4;
    sc.clip_seconds = 1.0;
    sc.n_ratings = 8;
    sc.rater_sd = 0.8;
    sc.seed = 3;
    return BuildDataset(SynthesizeCorpus(sc), 2, 4);
  }();
  return data;
}

ExperimentConfig TinyConfig(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.repeats = 1;
  cfg.base_seed = 17;
  cfg.train_cfg.batch_size = 8;
  cfg.train_cfg.max_epochs = 2;
  cfg.threads = 1;
  return cfg;
}

RunMetrics PlainRun(const ExperimentConfig &cfg) {
  const auto &data = TinyData();
  std::vector<nn::TrainSample> train, val;
  for (const auto &c : data.train) train.push_back({&c.segments, AggregateMos(c.ratings).mos});
  for (const auto &c : data.val) val.push_back({&c.segments, AggregateMos(c.ratings).mos});
  nn::TrainConfig tc = cfg.train_cfg;
  tc.seed = DeriveTrainSeed(cfg.base_seed, 0, 0);
  return TrainAndScore(train, val, tc, cfg.model_cfg);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() / ("sqm_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult RunCli(const std::string &args, const fs::path &dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(SQM_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream o(out), e(err);
  r.out.assign(std::istreambuf_iterator<char>(o), {});
  r.err.assign(std::istreambuf_iterator<char>(e), {});
  return r;
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("seeds: derived run seeds are pairwise distinct") {
  std::set<std::uint64_t> seen;
  for (int g = 0; g < 40; ++g)
    for (int r = 0; r < 40; ++r) {
      seen.insert(DeriveRunSeed(5, g, r));
      seen.insert(DeriveTrainSeed(5, g, r));
    }
  CHECK(seen.size() == 2 * 40 * 40);
  CHECK(DeriveRunSeed(5, 1, 2) != DeriveRunSeed(6, 1, 2));
  CHECK(DeriveRunSeed(5, 1, 2) != DeriveRunSeed(5, 2, 1));
}

TEST_CASE("config: JSON round trip and validation") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kGroupMatrix;
  cfg.repeats = 7;
  cfg.ratings_lo = 2;
  cfg.ratings_hi = 6;
  cfg.size_grid = {500, 1000, 2000, 4000};
  cfg.groups = {{2500, 4}, {5000, 4}, {2500, 8}, {5000, 8}};
  cfg.base_seed = 0xDEADBEEF12345ULL;
  cfg.train_cfg.lr = 5e-4;
  cfg.train_cfg.batch_size = 32;
  cfg.cropping.mos_shift = 0.25;
  SyntheticConfig sc;
  sc.n_speakers = 12;
  sc.clip_seconds = 2.5;
  cfg.synthetic = sc;
  cfg.output_path = "out.csv";
  const auto j = ExperimentConfigToJson(cfg);
  const ExperimentConfig back = ExperimentConfigFromJson(j);
  CHECK(ExperimentConfigToJson(back) == j);
  CHECK(back.base_seed == cfg.base_seed);
  CHECK(back.groups.size() == 4);
  CHECK(back.groups[3].n_ratings == 8);
  CHECK(back.synthetic->clip_seconds == 2.5);
  CHECK(ParseExperimentKind(ExperimentKindName(ExperimentKind::kCropping)) == ExperimentKind::kCropping);

  ExperimentConfig bad;
  bad.kind = ExperimentKind::kSizeSweep;
  CHECK(KindOf([&] { bad.Validate(); }) == ErrorKind::kInvalidArgument);
  bad.size_grid = {10};
  bad.repeats = 0;
  CHECK(KindOf([&] { bad.Validate(); }) == ErrorKind::kInvalidArgument);
  CHECK(KindOf([] { ExperimentConfigFromJson(nlohmann::json{{"kind", "nope"}}); }) == ErrorKind::kFormat);
  CHECK(KindOf([] { ExperimentConfigFromJson(nlohmann::json::array()); }) == ErrorKind::kFormat);
}

TEST_CASE("config: ratings grid") {
  ExperimentConfig cfg;
  cfg.ratings_lo = 1;
  cfg.ratings_hi = 8;
  CHECK(cfg.RatingsGrid() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
  cfg.ratings_grid = {1, 3, 8};
  CHECK(cfg.RatingsGrid() == std::vector<int>{1, 3, 8});
}

TEST_CASE("ratings sweep: range 1-8 with 7 repeats gives 56 rows") {
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kRatingsSweep);
  cfg.repeats = 7;
  cfg.train_cfg.max_epochs = 1;
  cfg.threads = 2;
  const SweepResult r = RunRatingsSweep(cfg, TinyData());
  REQUIRE(r.rows.size() == 56);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].x == std::to_string(1 + i / 7));
    CHECK(r.rows[i].run == static_cast<int>(i % 7));
    CHECK(std::isfinite(r.rows[i].val_rmse));
  }
  const auto means = r.MeanPccByX();
  REQUIRE(means.size() == 8);
  CHECK(means[0].first == "1");
}

TEST_CASE("ratings sweep: degenerate sweep equals a plain run") {
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kRatingsSweep);
  cfg.ratings_lo = cfg.ratings_hi = 8;
  const SweepResult r = RunRatingsSweep(cfg, TinyData());
  REQUIRE(r.rows.size() == 1);
  const RunMetrics plain = PlainRun(cfg);
  CHECK(r.rows[0].val_pcc == plain.val_pcc);
  CHECK(r.rows[0].val_rmse == plain.val_rmse);
}

TEST_CASE("ratings sweep: a file short of ratings is named") {
  ExperimentDataset data = TinyData();
  data.train[5].ratings.ratings.resize(3);
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kRatingsSweep);
  std::string what;
  CHECK(KindOf([&] { RunRatingsSweep(cfg, data); }, &what) == ErrorKind::kInsufficientRatings);
  CHECK(what.find(data.train[5].clip_id) != std::string::npos);
}

TEST_CASE("ratings sweep: noiseless raters make every rating count equivalent") {
  // With rater_sd 0 the subsampled labels are identical for every k, so the
  // difference between grid points is run-to-run noise.
  SyntheticConfig sc;
  sc.n_speakers = 8;
  sc.clips_per_speaker = 4;
  sc.clip_seconds = 1.0;
  sc.n_ratings = 8;
  sc.rater_sd = 0.0;
  sc.seed = 9;
  const ExperimentDataset data = BuildDataset(SynthesizeCorpus(sc), 2, 4);
  for (const auto &c : data.train)
    CHECK(std::set<int>(c.ratings.ratings.begin(), c.ratings.ratings.end()).size() == 1);
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kRatingsSweep);
  cfg.ratings_grid = {1, 8};
  cfg.repeats = 3;
  const SweepResult r = RunRatingsSweep(cfg, data);
  std::map<std::string, std::vector<double>> by_k;
  for (const auto &row : r.rows) by_k[row.x].push_back(row.val_rmse);
  auto mean = [](const std::vector<double> &v) { return (v[0] + v[1] + v[2]) / 3.0; };
  const double m1 = mean(by_k["1"]), m8 = mean(by_k["8"]);
  double ss = 0.0;
  for (double v : by_k["1"]) ss += (v - m1) * (v - m1);
  for (double v : by_k["8"]) ss += (v - m8) * (v - m8);
  const double pooled_sd = std::sqrt(ss / 4.0);
  // Two-sample t with 4 df stays below the 1 % critical value 4.604.
  CHECK(std::fabs(m1 - m8) / (pooled_sd * std::sqrt(2.0 / 3.0)) < 4.604);
}

TEST_CASE("size sweep: row arithmetic, degenerate grid, oversize grid") {
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kSizeSweep);
  const int full = static_cast<int>(TinyData().train.size());
  cfg.size_grid = {full};
  const SweepResult one = RunSizeSweep(cfg, TinyData());
  REQUIRE(one.rows.size() == 1);
  const RunMetrics plain = PlainRun(cfg);
  CHECK(one.rows[0].val_pcc == plain.val_pcc);
  CHECK(one.rows[0].val_rmse == plain.val_rmse);

  cfg.size_grid = {4, 8, 12, 16};
  cfg.repeats = 6;
  cfg.train_cfg.max_epochs = 1;
  const SweepResult grid = RunSizeSweep(cfg, TinyData());
  CHECK(grid.rows.size() == 24);
  CHECK(grid.rows[23].x == "16");
  CHECK(grid.rows[23].run == 5);

  cfg.size_grid = {full + 1};
  CHECK(KindOf([&] { RunSizeSweep(cfg, TinyData()); }) == ErrorKind::kInsufficientData);
}

TEST_CASE("group matrix: four groups, degenerate group, unsatisfiable group") {
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kGroupMatrix);
  const int full = static_cast<int>(TinyData().train.size());
  cfg.groups = {{full, 8}};
  const SweepResult one = RunGroupMatrix(cfg, TinyData());
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].x == "g1");
  const RunMetrics plain = PlainRun(cfg);
  CHECK(one.rows[0].val_pcc == plain.val_pcc);
  CHECK(one.rows[0].val_rmse == plain.val_rmse);

  cfg.groups = {{8, 4}, {16, 4}, {8, 8}, {16, 8}};
  cfg.repeats = 2;
  cfg.train_cfg.max_epochs = 1;
  const SweepResult four = RunGroupMatrix(cfg, TinyData());
  REQUIRE(four.rows.size() == 8);
  CHECK(four.rows[7].x == "g4");

  cfg.groups = {{8, 4}, {8, 9}};
  std::string what;
  CHECK(KindOf([&] { RunGroupMatrix(cfg, TinyData()); }, &what) == ErrorKind::kInsufficientData);
  CHECK(what.find("g2") != std::string::npos);
}

TEST_CASE("property: sweeps are reproducible and independent of thread count") {
  ExperimentConfig cfg = TinyConfig(ExperimentKind::kSizeSweep);
  cfg.size_grid = {8, 16};
  cfg.repeats = 2;
  cfg.train_cfg.max_epochs = 1;
  const std::string a = RunSizeSweep(cfg, TinyData()).ToCsv();
  cfg.threads = 3;
  const std::string b = RunSizeSweep(cfg, TinyData()).ToCsv();
  CHECK(a == b);
  CHECK(a.rfind("x,run,val_pcc,val_rmse\n", 0) == 0);
  cfg.base_seed += 1;
  CHECK(RunSizeSweep(cfg, TinyData()).ToCsv() != a);
}

TEST_CASE("cropping: identical pairs are a degenerate test") {
  CroppingSpec spec;
  spec.pairs = 5;
  auto pairs = SynthesizeCropPairs(spec, 1.0, 3);
  for (auto &p : pairs) {
    p.cropped = p.uncropped;
    p.cropped_ratings.ratings = p.uncropped_ratings.ratings;
  }
  CHECK(KindOf([&] { RunCroppingStudy(pairs, nullptr); }) == ErrorKind::kDegenerateTest);
}

TEST_CASE("cropping: a full-point drop is detected") {
  CroppingSpec spec;
  spec.pairs = 15;
  spec.mos_shift = 1.0;
  spec.rater_sd = 0.3;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TTestResult t = RunCroppingStudy(SynthesizeCropPairs(spec, 1.0, seed), nullptr);
    CHECK(t.p_two_tailed < 0.01);
    CHECK(t.t < 0.0);
    CHECK(t.df == 14);
  }
}

TEST_CASE("cropping: equal true MOS rarely looks significant") {
  CroppingSpec spec;
  spec.pairs = 15;
  spec.rater_sd = 0.8;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    hits += RunCroppingStudy(SynthesizeCropPairs(spec, 1.0, seed), nullptr).p_two_tailed <= 0.05;
  // Nominal rate 5 %; 13 or more of 100 has probability below 0.2 %.
  CHECK(hits < 13);
}

TEST_CASE("cropping: a model scorer is applied to both members") {
  CroppingSpec spec;
  spec.pairs = 4;
  nn::Model<float> model;
  model.Initialize(2);
  const ModelPredictor pred(model);
  const TTestResult t = RunCroppingStudy(SynthesizeCropPairs(spec, 1.0, 8), &pred);
  CHECK(t.df == 3);
  CHECK(std::isfinite(t.t));
}

TEST_CASE("cli: usage, data errors, predict and reproducible training") {
  TempDir tmp("cli");
  CHECK(RunCli("", tmp.path).code == 1);
  CHECK(RunCli("train --manifest", tmp.path).code == 1);

  const fs::path corpus = tmp.path / "corpus";
  const CliResult synth = RunCli("synth --out-dir " + corpus.string() +
                                     " --speakers 6 --clips 2 --seconds 1 --val-speakers 2 --seed 4",
                                 tmp.path);
  REQUIRE(synth.code == 0);

  const std::string train_args = "train --manifest " + (corpus / "manifest.csv").string() +
                                 " --labels " + (corpus / "labels.csv").string() +
                                 " --epochs 1 --batch 4 --seed 3 --out-checkpoint ";
  REQUIRE(RunCli(train_args + (tmp.path / "a.pqm").string(), tmp.path).code == 0);
  REQUIRE(RunCli(train_args + (tmp.path / "b.pqm").string(), tmp.path).code == 0);
  CHECK(Slurp(tmp.path / "a.pqm") == Slurp(tmp.path / "b.pqm"));
  CHECK(Slurp(tmp.path / "a.pqm").size() > 1000);

  const std::string wav = (corpus / "wav" / "s0_c0.wav").string();
  const CliResult p = RunCli("predict --checkpoint " + (tmp.path / "a.pqm").string() + " --wav " + wav, tmp.path);
  CHECK(p.code == 0);
  double mos = 0.0;
  int consumed = 0;
  REQUIRE(std::sscanf(p.out.c_str(), "%lf%n", &mos, &consumed) == 1);
  CHECK(mos >= 1.0);
  CHECK(mos <= 5.0);
  CHECK(p.out.find('.') == p.out.size() - 4);  // two decimals and a newline

  // A manifest pointing at a missing file.
  std::string manifest = Slurp(corpus / "manifest.csv");
  const std::string missing = (corpus / "wav" / "nowhere.wav").string();
  const auto pos = manifest.find(wav);
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, wav.size(), missing);
  std::ofstream(tmp.path / "broken.csv") << manifest;
  const CliResult bad = RunCli("train --manifest " + (tmp.path / "broken.csv").string() + " --labels " +
                                   (corpus / "labels.csv").string() + " --epochs 1 --out-checkpoint " +
                                   (tmp.path / "c.pqm").string(),
                               tmp.path);
  CHECK(bad.code == 2);
  CHECK(bad.err.find(missing) != std::string::npos);
  CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);
}

TEST_CASE("config: every shipped config parses and validates") {
  int n = 0;
  for (const auto &entry : fs::directory_iterator(fs::path(SQM_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const ExperimentConfig cfg = ReadExperimentConfig(entry.path().string());
    if (cfg.kind != ExperimentKind::kCropping) CHECK_NOTHROW(cfg.Validate());
    ++n;
  }
  CHECK(n >= 4);
}
