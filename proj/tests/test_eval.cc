// tests/test_eval.cc

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

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sqm/error.h"
#include "sqm/eval.h"
#include "sqm/nn/model.h"
#include "test_support.h"

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

double BoostTwoTailed(double t, int df) {
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

class TableStub : public MosPredictor {
 public:
  explicit TableStub(std::map<std::string, double> v) : v_(std::move(v)) {}
  double Predict(const std::string &id, const MelSegments &) const override { return v_.at(id); }

 private:
  std::map<std::string, double> v_;
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sqm_eval_" + std::to_string(std::random_device{}()) + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Writes n one-second noisy tones and returns a manifest over them.
Manifest WriteClips(const fs::path &dir, int n, bool identical = false) {
  Manifest m;
  for (int i = 0; i < n; ++i) {
    AudioClip c = sqm::testing::Sine(440.0, 1.0, 8000, 0.3);
    const AudioClip noise = sqm::testing::Gaussian(c.samples.size(), 0.05, identical ? 1 : 100 + i);
    for (std::size_t k = 0; k < c.samples.size(); ++k) c.samples[k] += noise.samples[k];
    char id[16];
    std::snprintf(id, sizeof id, "c%03d", i);
    const std::string path = (dir / (std::string(id) + ".wav")).string();
    WriteWavFile(path, c);
    ManifestEntry e;
    e.clip_id = id;
    e.file_path = path;
    e.speaker_id = "s" + std::to_string(i % 5);
    e.sentence_id = "x";
    e.split = Split::kTest;
    m.entries.push_back(e);
  }
  return m;
}

std::vector<ClipPrediction> ReadPredictionsCsv(const std::string &path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "clip_id,mos,prediction");
  std::vector<ClipPrediction> out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    ClipPrediction c;
    std::string f;
    std::getline(ss, c.clip_id, ',');
    std::getline(ss, f, ',');
    c.mos = std::stod(f);
    std::getline(ss, f, ',');
    c.prediction = std::stod(f);
    out.push_back(c);
  }
  return out;
}

std::vector<MosLabel> UniformLabels(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.5, 4.5);
  std::vector<MosLabel> labels;
  for (int i = 0; i < n; ++i) labels.push_back({"id" + std::to_string(i), u(rng), 0.0, 1});
  return labels;
}

}  // namespace

TEST_CASE("pearson: examples") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  CHECK(Pearson(x, x) == 1.0);
  std::vector<double> y;
  for (double v : x) y.push_back(-2 * v + 7);
  CHECK(Pearson(x, y) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(Pearson(x, std::vector<double>{2, 1, 4, 3, 5}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(KindOf([&] { Pearson(x, std::vector<double>(5, 3.0)); }) == ErrorKind::kUndefinedCorrelation);
  CHECK(KindOf([&] { Pearson(x, std::vector<double>(4, 3.0)); }) == ErrorKind::kShape);
}

TEST_CASE("property: pearson is invariant to positive affine maps") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> a(0.1, 10.0), b(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(20), y(20), z(20);
    for (int i = 0; i < 20; ++i) {
      x[i] = g(rng);
      y[i] = 0.5 * x[i] + g(rng);
    }
    const double s = a(rng), o = b(rng);
    for (int i = 0; i < 20; ++i) z[i] = s * y[i] + o;
    CHECK(std::fabs(Pearson(x, z) - Pearson(x, y)) < 1e-12);
  }
}

TEST_CASE("rmse: examples and properties") {
  const std::vector<double> t = {1.0, 2.0, 3.0, 4.0};
  CHECK(Rmse(t, t) == 0.0);
  CHECK(Rmse(std::vector<double>{2, 1, 4, 3}, t) == 1.0);
  CHECK(Rmse(std::vector<double>{3.0, 4.0}, std::vector<double>{3.5, 4.5}) == 0.5);
  CHECK(KindOf([&] { Rmse(t, std::vector<double>{1.0}); }) == ErrorKind::kShape);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(3.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(10), q(10);
    for (int i = 0; i < 10; ++i) {
      p[i] = g(rng);
      q[i] = g(rng);
    }
    CHECK(Rmse(p, q) == Rmse(q, p));
    CHECK(Rmse(p, q) > 0.0);
  }
}

TEST_CASE("t-test: examples") {
  CHECK(KindOf([] {
          PairedTTest(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
        }) == ErrorKind::kDegenerateTest);
  const auto sym = PairedTTest(std::vector<double>{2.0, 0.0}, std::vector<double>{1.0, 1.0});
  CHECK(sym.t == 0.0);
  CHECK(sym.p_two_tailed == doctest::Approx(1.0).epsilon(1e-12));
  const auto r = PairedTTest(std::vector<double>{2, 2, 3, 5, 4}, std::vector<double>{1, 2, 3, 4, 5});
  CHECK(r.mean_diff == doctest::Approx(0.2));
  CHECK(r.t == doctest::Approx(0.2 / (std::sqrt(0.7) / std::sqrt(5.0))).epsilon(1e-12));
  CHECK(std::fabs(r.t - 0.5345) < 1e-4);
  CHECK(r.df == 4);
  CHECK(std::fabs(r.p_two_tailed - 0.62) < 0.01);
  CHECK(r.p_two_tailed == doctest::Approx(BoostTwoTailed(r.t, 4)).epsilon(1e-10));
}

TEST_CASE("property: t-test antisymmetry and reference p-values") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 29;
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[i] = g(rng);
      b[i] = g(rng) + 0.3;
    }
    const auto ab = PairedTTest(a, b), ba = PairedTTest(b, a);
    CHECK(ab.t == -ba.t);
    CHECK(ab.p_two_tailed == ba.p_two_tailed);
    CHECK(std::fabs(ab.p_two_tailed - BoostTwoTailed(ab.t, n - 1)) < 1e-9);
  }
}

TEST_CASE("incomplete beta against Boost") {
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.999})
    for (double a : {0.5, 1.0, 2.0, 15.0})
      for (double b : {0.5, 3.0}) {
        CAPTURE(x);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(std::fabs(RegularizedIncompleteBeta(x, a, b) - boost::math::ibeta(a, b, x)) < 1e-12);
      }
  CHECK(RegularizedIncompleteBeta(0.0, 2.0, 0.5) == 0.0);
  CHECK(RegularizedIncompleteBeta(1.0, 2.0, 0.5) == 1.0);
}

TEST_CASE("histogram: eight half-point bins over [1, 5]") {
  const auto h = MosHistogram(std::vector<double>{1.0, 1.49, 1.5, 3.2, 4.99, 5.0});
  const std::array<int, 8> want = {2, 1, 0, 0, 1, 0, 0, 2};
  CHECK(h == want);
}

TEST_CASE("uniform subset eval: examples") {
  const auto labels = UniformLabels(300, 4);
  std::map<std::string, double> same, mirror;
  for (const auto &l : labels) {
    same[l.clip_id] = l.mos;
    mirror[l.clip_id] = 5.0 - l.mos;
  }
  const auto s = UniformSubsetEval(same, labels, 50, 9);
  CHECK(s.mean_pcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.sd_pcc < 1e-12);
  CHECK(s.repeats == 50);
  CHECK(UniformSubsetEval(mirror, labels, 50, 9).mean_pcc == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("uniform subset eval: subset mean tracks the full-set correlation") {
  const auto labels = UniformLabels(600, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.5);
  std::map<std::string, double> preds;
  std::vector<double> p, y;
  for (const auto &l : labels) {
    preds[l.clip_id] = l.mos + g(rng);
    p.push_back(preds[l.clip_id]);
    y.push_back(l.mos);
  }
  const double full = Pearson(p, y);
  CHECK(std::fabs(UniformSubsetEval(preds, labels, 1000, 7).mean_pcc - full) < 0.05);
}

TEST_CASE("property: one repeat equals pearson on the drawn subset") {
  const auto labels = UniformLabels(200, 8);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.7);
  std::map<std::string, double> preds, mos;
  for (const auto &l : labels) {
    preds[l.clip_id] = l.mos + g(rng);
    mos[l.clip_id] = l.mos;
  }
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const auto ids = SampleUniformSubset(labels, UniformSubsetSeed(seed, 0));
    std::vector<double> p, y;
    for (const auto &id : ids) {
      p.push_back(preds[id]);
      y.push_back(mos[id]);
    }
    CHECK(UniformSubsetEval(preds, labels, 1, seed).mean_pcc == Pearson(p, y));
  }
}

TEST_CASE("uniform subset eval: unsatisfiable bins propagate") {
  auto labels = UniformLabels(30, 10);
  std::map<std::string, double> preds;
  for (const auto &l : labels) preds[l.clip_id] = l.mos;
  CHECK(KindOf([&] { UniformSubsetEval(preds, labels, 3, 1); }) == ErrorKind::kInsufficientBin);
}

TEST_CASE("evaluate: stub predictor on two clips") {
  TempDir tmp;
  const Manifest m = WriteClips(tmp.path, 2);
  const std::vector<MosLabel> labels = {{"c000", 2.0, 0.0, 4}, {"c001", 4.0, 0.0, 4}};
  const TableStub stub({{"c000", 2.5}, {"c001", 3.0}});
  const EvalReport r = Evaluate(stub, m, labels, EvaluateOptions{});
  CHECK(r.n == 2);
  REQUIRE(r.pcc.has_value());
  CHECK(*r.pcc == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.rmse == doctest::Approx(std::sqrt((0.25 + 1.0) / 2.0)).epsilon(1e-15));
  REQUIRE(r.clips.size() == 2);
  CHECK(r.clips[1].prediction == 3.0);
  CHECK(r.clips[1].mos == 4.0);
}

TEST_CASE("evaluate: identical audio through the model gives a null PCC with a reason") {
  TempDir tmp;
  const Manifest m = WriteClips(tmp.path, 4, true);
  std::vector<MosLabel> labels;
  for (int i = 0; i < 4; ++i) labels.push_back({m.entries[static_cast<std::size_t>(i)].clip_id, 1.5 + i, 0.0, 3});
  nn::Model<float> model;
  model.Initialize(3);
  const ModelPredictor pred(model);
  const EvalReport r = Evaluate(pred, m, labels, EvaluateOptions{});
  CHECK_FALSE(r.pcc.has_value());
  CHECK(r.pcc_error.find("constant") != std::string::npos);
  const auto j = ReportToJson(r);
  CHECK(j["pcc"].is_null());
  CHECK(j["pcc_error"].get<std::string>() == r.pcc_error);
}

TEST_CASE("evaluate: report PCC equals pearson recomputed from the emitted CSV") {
  TempDir tmp;
  const Manifest m = WriteClips(tmp.path, 100);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> snr(0.0, 40.0);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<MosLabel> labels;
  std::map<std::string, double> table;
  for (const auto &e : m.entries) {
    const double s = snr(rng);
    labels.push_back({e.clip_id, 1.0 + 0.1 * s + g(rng), 0.0, 8});
    table[e.clip_id] = 1.0 + 0.1 * s + g(rng);
  }
  EvaluateOptions opt;
  opt.threads = 3;
  const EvalReport r = Evaluate(TableStub(table), m, labels, opt);
  const std::string csv = (tmp.path / "pred.csv").string();
  WritePredictionsCsv(csv, r);
  const auto back = ReadPredictionsCsv(csv);
  REQUIRE(back.size() == 100);
  std::vector<double> p, y;
  for (const auto &c : back) {
    p.push_back(c.prediction);
    y.push_back(c.mos);
  }
  REQUIRE(r.pcc.has_value());
  CHECK(Pearson(p, y) == *r.pcc);
  CHECK(Rmse(p, y) == r.rmse);
  // Aggregation order does not depend on the thread count.
  opt.threads = 1;
  CHECK(Evaluate(TableStub(table), m, labels, opt).pcc == r.pcc);
}

TEST_CASE("evaluate: missing label and decode failures") {
  TempDir tmp;
  Manifest m = WriteClips(tmp.path, 3);
  std::vector<MosLabel> labels = {{"c000", 2.0, 0.0, 4}, {"c001", 3.0, 0.0, 4}};
  const TableStub stub({{"c000", 2.5}, {"c001", 3.0}, {"c002", 4.0}});
  std::string what;
  CHECK(KindOf([&] { Evaluate(stub, m, labels, EvaluateOptions{}); }, &what) == ErrorKind::kMissingLabel);
  CHECK(what.find("c002") != std::string::npos);

  labels.push_back({"c002", 4.5, 0.0, 4});
  std::ofstream(m.entries[1].file_path, std::ios::binary) << "garbage";
  CHECK(KindOf([&] { Evaluate(stub, m, labels, EvaluateOptions{}); }, &what) == ErrorKind::kFormat);
  CHECK(what.find("c001") != std::string::npos);
  EvaluateOptions skip;
  skip.skip_bad = true;
  const EvalReport r = Evaluate(stub, m, labels, skip);
  CHECK(r.n == 2);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].rfind("c001:", 0) == 0);
}
