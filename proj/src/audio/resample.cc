// src/audio/resample.cc

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
#include <numbers>
#include <numeric>

#include "sqm/audio.h"
#include "sqm/error.h"

namespace sqm {

namespace {

constexpr double kCutoffHz = 3900.0;
constexpr double kKaiserBeta = 8.6;
// Kernel support measured in output-rate periods.
constexpr int kTapsPerPhase = 64;

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

bool IsSupportedRate(int rate) {
  return rate == 8000 || rate == 16000 || rate == 32000 || rate == 44100 ||
         rate == 48000;
}

}  // namespace

AudioClip ResampleTo8k(const AudioClip &clip) {
  const int in_rate = clip.sample_rate_hz;
  if (!IsSupportedRate(in_rate))
    Fail(ErrorKind::kUnsupportedRate,
         "unsupported sample rate " + std::to_string(in_rate));
  if (in_rate == kCanonicalRate) return clip;

  const long g = std::gcd(in_rate, kCanonicalRate);
  const long up = kCanonicalRate / g;   // output position advances by
  const long down = in_rate / g;        // down/up input samples per output

  const double ratio = static_cast<double>(in_rate) / kCanonicalRate;
  const double half_width = 0.5 * kTapsPerPhase * ratio;  // in input samples
  const double fc = kCutoffHz / in_rate;                  // cycles per input sample
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  auto kernel = [&](double tau) {
    const double r = tau / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * fc * Sinc(2.0 * fc * tau) * w;
  };

  // Output m sits at input position m*down/up; its fractional part takes only
  // `up` distinct values, so taps are tabulated once per phase.
  const long n_in = static_cast<long>(clip.samples.size());
  const long n_out = std::lround(static_cast<double>(n_in) * kCanonicalRate / in_rate);
  const long reach = static_cast<long>(std::ceil(half_width));
  const long n_taps = 2 * reach + 1;
  std::vector<std::vector<double>> phases(static_cast<std::size_t>(up));
  for (long ph = 0; ph < up; ++ph) {
    const double frac = static_cast<double>(ph) / up;
    auto &taps = phases[static_cast<std::size_t>(ph)];
    taps.resize(static_cast<std::size_t>(n_taps));
    for (long j = 0; j < n_taps; ++j) taps[static_cast<std::size_t>(j)] = kernel(frac + reach - j);
  }

  AudioClip out = clip;
  out.sample_rate_hz = kCanonicalRate;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0f);
  for (long m = 0; m < n_out; ++m) {
    const long num = m * down;
    const long base = num / up;
    const auto &taps = phases[static_cast<std::size_t>(num % up)];
    // taps[j] weights input sample base - reach + j.
    double acc = 0.0;
    const long first = base - reach;
    const long j0 = std::max(0L, -first);
    const long j1 = std::min(n_taps, n_in - first);
    for (long j = j0; j < j1; ++j)
      acc += taps[static_cast<std::size_t>(j)] * clip.samples[static_cast<std::size_t>(first + j)];
    out.samples[static_cast<std::size_t>(m)] =
        static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

AudioClip CropClip(const AudioClip &clip, double start_s, double dur_s) {
  if (!(start_s >= 0.0) || !(dur_s >= 0.0))
    Fail(ErrorKind::kBounds, "crop window must have non-negative start and duration");
  const double fs = clip.sample_rate_hz;
  const long begin = std::lround(start_s * fs);
  const long end = std::lround((start_s + dur_s) * fs);
  if (end > static_cast<long>(clip.samples.size()))
    Fail(ErrorKind::kBounds, "crop window [" + std::to_string(start_s) + " s, " +
                                 std::to_string(start_s + dur_s) +
                                 " s) exceeds clip duration " +
                                 std::to_string(clip.duration_s()) + " s");
  AudioClip out = clip;
  out.samples.assign(clip.samples.begin() + begin, clip.samples.begin() + end);
  return out;
}

}  // namespace sqm
