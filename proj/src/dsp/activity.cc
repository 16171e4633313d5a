// src/dsp/activity.cc

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
#include <deque>

#include "sqm/dsp.h"
#include "sqm/error.h"

namespace sqm {

namespace {

constexpr double kTimeConstantS = 0.03;
constexpr double kHangoverS = 0.2;
constexpr double kMarginDb = 15.9;
constexpr double kStepDb = 0.1;
constexpr double kScanRangeDb = 120.0;

}  // namespace

ActivityResult SpeechActivity(const AudioClip &clip) {
  const std::size_t n = clip.samples.size();
  if (n == 0) Fail(ErrorKind::kEmptyAudio, "empty clip");
  const double fs = clip.sample_rate_hz;
  const double a = std::exp(-1.0 / (kTimeConstantS * fs));
  const std::size_t hang = static_cast<std::size_t>(std::lround(kHangoverS * fs));

  double energy = 0.0;
  std::vector<double> env(n);
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = clip.samples[i];
    energy += x * x;
    e = a * e + (1.0 - a) * std::fabs(x);
    env[i] = e;
  }
  if (energy <= 0.0) Fail(ErrorKind::kNoSpeech, "clip is digital silence");

  // held[i] = max(env[i-hang .. i]): a sample is active at threshold c iff
  // the envelope exceeded c at most `hang` samples earlier.
  std::vector<double> held(n);
  std::deque<std::size_t> window;
  for (std::size_t i = 0; i < n; ++i) {
    while (!window.empty() && env[window.back()] <= env[i]) window.pop_back();
    window.push_back(i);
    if (window.front() + hang < i) window.pop_front();
    held[i] = env[window.front()];
  }
  std::vector<double> sorted = held;
  std::sort(sorted.begin(), sorted.end());

  const double peak = sorted.back();
  const double peak_db = 20.0 * std::log10(peak);
  const int steps = static_cast<int>(kScanRangeDb / kStepDb);

  double best_gap = INFINITY;
  ActivityResult best;
  for (int j = 1; j <= steps; ++j) {
    const double c_db = peak_db - kStepDb * j;
    const double c = std::pow(10.0, c_db / 20.0);
    const auto active = static_cast<std::size_t>(
        sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), c));
    if (active == 0) continue;
    const double level_db = 10.0 * std::log10(energy / static_cast<double>(active));
    const double gap = std::fabs(level_db - c_db - kMarginDb);
    if (gap < best_gap) {
      best_gap = gap;
      best.active_speech_level_db = level_db;
      best.activity_factor = static_cast<double>(active) / static_cast<double>(n);
    }
  }
  return best;
}

}  // namespace sqm
