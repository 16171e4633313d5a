// src/dataprep/mixing.cc

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
#include <random>

#include "sqm/dataprep.h"
#include "sqm/dsp.h"
#include "sqm/error.h"

namespace sqm {

AudioClip MixNoise(const AudioClip &speech, const AudioClip &noise, double snr_db,
                   std::uint64_t rng_seed) {
  if (speech.sample_rate_hz != kCanonicalRate || noise.sample_rate_hz != kCanonicalRate)
    Fail(ErrorKind::kInvalidArgument, "mixing expects canonical 8 kHz clips");
  if (!(snr_db >= 0.0 && snr_db <= 40.0))
    Fail(ErrorKind::kInvalidArgument, "SNR must lie in [0, 40] dB");
  if (noise.samples.empty())
    Fail(ErrorKind::kDegenerateNoise, "noise clip is empty");

  const std::size_t n = speech.samples.size();
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, noise.samples.size() - 1);
  const std::size_t offset = pick(rng);

  std::vector<double> looped(n);
  double noise_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = noise.samples[(offset + i) % noise.samples.size()];
    looped[i] = v;
    noise_power += v * v;
  }
  noise_power /= static_cast<double>(std::max<std::size_t>(n, 1));
  if (!(noise_power > 0.0))
    Fail(ErrorKind::kDegenerateNoise, "noise clip has zero power");

  const ActivityResult act = SpeechActivity(speech);
  const double speech_power = std::pow(10.0, act.active_speech_level_db / 10.0);
  const double gain =
      std::sqrt(speech_power / (noise_power * std::pow(10.0, snr_db / 10.0)));

  std::vector<double> mix(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mix[i] = speech.samples[i] + gain * looped[i];
    peak = std::max(peak, std::fabs(mix[i]));
  }
  double scale = 1.0;
  if (peak > 1.0) scale = 0.999 / peak;

  AudioClip out = speech;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<float>(mix[i] * scale);
  out.condition = Condition::kNoisy;
  out.snr_db = snr_db;
  out.mix_scale = scale;
  return out;
}

AudioClip ExtractClip(const AudioClip &source, std::uint64_t rng_seed) {
  const auto len = static_cast<std::size_t>(std::lround(kClipSeconds * source.sample_rate_hz));
  if (source.samples.size() < len)
    Fail(ErrorKind::kTooShort, "source is " + std::to_string(source.duration_s()) +
                                   " s, need at least " + std::to_string(kClipSeconds) + " s");
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, source.samples.size() - len);
  for (int attempt = 0; attempt < kMaxExtractAttempts; ++attempt) {
    const std::size_t start = pick(rng);
    AudioClip window = source;
    window.samples.assign(source.samples.begin() + static_cast<std::ptrdiff_t>(start),
                          source.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
    try {
      if (SpeechActivity(window).activity_factor >= kMinActivity) return window;
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kNoSpeech) throw;
    }
  }
  Fail(ErrorKind::kNoActiveWindow,
       "no 10 s window with >= 50% speech activity after " +
           std::to_string(kMaxExtractAttempts) + " attempts");
}

}  // namespace sqm
