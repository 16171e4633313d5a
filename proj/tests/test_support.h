// tests/test_support.h

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

#ifndef SQM_TESTS_TEST_SUPPORT_H_
#define SQM_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sqm/audio.h"

namespace sqm::testing {

inline AudioClip Sine(double freq_hz, double seconds, int rate = 8000, double amp = 1.0,
                      double phase = 0.0) {
  AudioClip c;
  c.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = static_cast<float>(
        amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate + phase));
  return c;
}

inline AudioClip Silence(double seconds, int rate = 8000) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.assign(static_cast<std::size_t>(std::llround(seconds * rate)), 0.0f);
  return c;
}

inline AudioClip Gaussian(std::size_t n, double sd, std::uint64_t seed) {
  AudioClip c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  c.samples.resize(n);
  for (auto &x : c.samples) x = static_cast<float>(g(rng));
  return c;
}

// Hand-assembled RIFF/WAVE bytes, independent of EncodeWav.
inline std::vector<std::uint8_t> RawWav(int rate, int channels, const std::vector<std::int16_t> &pcm,
                                        int format_tag = 1, int bits = 16) {
  std::vector<std::uint8_t> b;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto tag = [&](const char *t) { b.insert(b.end(), t, t + 4); };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  tag("RIFF");
  u32(36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(static_cast<std::uint16_t>(format_tag));
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  tag("data");
  u32(data_bytes);
  for (auto s : pcm) u16(static_cast<std::uint16_t>(s));
  return b;
}

// Direct DFT magnitude of x at frequency f, normalized to sine amplitude.
inline double DftAmplitude(const std::vector<float> &x, double f, int rate) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / rate;
    re += x[i] * std::cos(w);
    im -= x[i] * std::sin(w);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(x.size());
}

inline double Rms(const std::vector<float> &x) {
  double s = 0.0;
  for (float v : x) s += static_cast<double>(v) * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace sqm::testing

#endif  // SQM_TESTS_TEST_SUPPORT_H_
