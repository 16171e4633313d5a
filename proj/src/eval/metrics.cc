// src/eval/metrics.cc

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
#include <cmath>
#include <limits>

#include "sqm/error.h"
#include "sqm/eval.h"
#include "sqm/random.h"

namespace sqm {

namespace {

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Lentz's method for the continued fraction of I_x(a, b); valid for
// x < (a + 1) / (a + b + 2).
double BetaContinuedFraction(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kTol = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kTol) return h;
  }
  Fail(ErrorKind::kInvalidArgument, "incomplete beta continued fraction did not converge");
}

}  // namespace

double Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    Fail(ErrorKind::kShape, "pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  if (x.size() < 2) Fail(ErrorKind::kShape, "pearson needs at least two points");
  const double mx = Mean(x), my = Mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    Fail(ErrorKind::kUndefinedCorrelation, "pearson: constant input vector");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double Rmse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    Fail(ErrorKind::kShape, "rmse: length mismatch " + std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()));
  if (pred.empty()) Fail(ErrorKind::kShape, "rmse needs at least one point");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double RegularizedIncompleteBeta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) Fail(ErrorKind::kInvalidArgument, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) Fail(ErrorKind::kInvalidArgument, "incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(x, a, b) / a;
  return 1.0 - front * BetaContinuedFraction(1.0 - x, b, a) / b;
}

double StudentTwoTailedP(double t, int df) {
  if (df < 1) Fail(ErrorKind::kInvalidArgument, "t distribution needs df >= 1");
  if (std::isinf(t)) return 0.0;
  const double nu = df;
  const double p = RegularizedIncompleteBeta(nu / (nu + t * t), nu / 2.0, 0.5);
  return std::clamp(p, 0.0, 1.0);
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    Fail(ErrorKind::kShape, "paired t-test: length mismatch");
  if (a.size() < 2) Fail(ErrorKind::kShape, "paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = Mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0)
    Fail(ErrorKind::kDegenerateTest, "paired differences have zero variance");
  TTestResult r;
  r.mean_diff = mean;
  r.df = static_cast<int>(n) - 1;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_two_tailed = StudentTwoTailedP(r.t, r.df);
  return r;
}

std::array<int, kHistogramBins> MosHistogram(std::span<const double> mos) {
  std::array<int, kHistogramBins> h{};
  for (double m : mos) {
    int bin = static_cast<int>(std::floor((m - 1.0) / 0.5));
    h[static_cast<std::size_t>(std::clamp(bin, 0, kHistogramBins - 1))]++;
  }
  return h;
}

std::uint64_t UniformSubsetSeed(std::uint64_t seed, int repeat) {
  return MixSeed(seed, {0x5B5E7ULL, static_cast<std::uint64_t>(repeat)});
}

UniformSubsetStats UniformSubsetEval(const std::map<std::string, double> &preds,
                                     const std::vector<MosLabel> &labels, int repeats,
                                     std::uint64_t rng_seed) {
  if (repeats < 1) Fail(ErrorKind::kInvalidArgument, "repeats must be >= 1");
  std::map<std::string, double> mos;
  for (const auto &l : labels) mos[l.clip_id] = l.mos;
  std::vector<double> pccs;
  pccs.reserve(static_cast<std::size_t>(repeats));
  std::vector<double> p, y;
  for (int r = 0; r < repeats; ++r) {
    const auto ids = SampleUniformSubset(labels, UniformSubsetSeed(rng_seed, r));
    p.clear();
    y.clear();
    for (const auto &id : ids) {
      auto it = preds.find(id);
      if (it == preds.end())
        Fail(ErrorKind::kMissingLabel, "no prediction for clip '" + id + "'");
      p.push_back(it->second);
      y.push_back(mos.at(id));
    }
    pccs.push_back(Pearson(p, y));
  }
  UniformSubsetStats s;
  s.repeats = repeats;
  s.mean_pcc = Mean(pccs);
  double ss = 0.0;
  for (double v : pccs) ss += (v - s.mean_pcc) * (v - s.mean_pcc);
  s.sd_pcc = repeats > 1 ? std::sqrt(ss / (repeats - 1)) : 0.0;
  return s;
}

}  // namespace sqm
