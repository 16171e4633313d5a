// tests/test_dsp.cc

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sqm/dsp.h"
#include "sqm/error.h"
#include "test_support.h"

using namespace sqm;
using sqm::testing::Gaussian;
using sqm::testing::Silence;
using sqm::testing::Sine;

namespace {

double HtkMel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double HtkHz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Log-mel energies of one frame by direct DFT and a separately built
// triangular filterbank.
std::vector<double> OracleFrame(const std::vector<float> &x, std::size_t start) {
  const int win = 160, nfft = 256, n_mels = 32;
  std::vector<double> power(nfft / 2 + 1);
  for (int k = 0; k <= nfft / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < win; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
      const double v = w * x[start + static_cast<std::size_t>(i)];
      re += v * std::cos(2.0 * std::numbers::pi * k * i / nfft);
      im -= v * std::sin(2.0 * std::numbers::pi * k * i / nfft);
    }
    power[static_cast<std::size_t>(k)] = re * re + im * im;
  }
  std::vector<double> out(n_mels);
  const double top = HtkMel(4000.0);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = HtkHz(top * m / 33.0), mid = HtkHz(top * (m + 1) / 33.0),
                 hi = HtkHz(top * (m + 2) / 33.0);
    double e = 0.0;
    for (int k = 0; k <= nfft / 2; ++k) {
      const double f = k * 8000.0 / nfft;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * power[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(m)] = std::log10(std::max(e, 1e-7));
  }
  return out;
}

int BruteForceFrames(std::size_t n) {
  int count = 0;
  for (std::size_t s = 0; s + 160 <= n; s += 80) ++count;
  return count;
}

int BruteForceSegments(int frames) {
  int count = 0;
  for (int k = 0; 24 * k + 33 <= frames; ++k) ++count;
  return count;
}

ErrorKind KindOf(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("frames: 10 s at 8 kHz gives 999 frames") {
  const FrontendConfig cfg;
  CHECK(BruteForceFrames(80000) == 999);
  CHECK(CountFrames(80000, cfg, 8000) == 999);
  const MelSpectrogram mel = ComputeMelSpectrogram(Gaussian(80000, 0.1, 1));
  CHECK(mel.n_frames == 999);
  CHECK(mel.n_mels == 32);
}

TEST_CASE("property: frame count matches enumeration of frame starts") {
  const FrontendConfig cfg;
  for (std::size_t n = 0; n < 3000; n += 7) CHECK(CountFrames(n, cfg, 8000) == BruteForceFrames(n));
}

TEST_CASE("mel: silence hits the log floor everywhere") {
  const MelSpectrogram mel = ComputeMelSpectrogram(Silence(1.0));
  for (float v : mel.data) CHECK(v == doctest::Approx(-7.0).epsilon(1e-7));
}

TEST_CASE("mel: matches a direct-DFT oracle") {
  const AudioClip c = Gaussian(4000, 0.2, 17);
  const MelSpectrogram mel = ComputeMelSpectrogram(c);
  for (int t : {0, 7, mel.n_frames - 1}) {
    const auto want = OracleFrame(c.samples, static_cast<std::size_t>(t) * 80);
    for (int m = 0; m < 32; ++m) CHECK(mel.at(t, m) == doctest::Approx(want[m]).epsilon(1e-5));
  }
}

TEST_CASE("mel: 1 kHz sine peaks in the band centred nearest 1 kHz") {
  const double top = HtkMel(4000.0);
  int nearest = 0;
  for (int m = 0; m < 32; ++m)
    if (std::fabs(HtkHz(top * (m + 1) / 33.0) - 1000.0) <
        std::fabs(HtkHz(top * (nearest + 1) / 33.0) - 1000.0))
      nearest = m;
  const auto centers = MelCenterFrequencies(FrontendConfig{});
  CHECK(centers[static_cast<std::size_t>(nearest)] ==
        doctest::Approx(HtkHz(top * (nearest + 1) / 33.0)));

  const MelSpectrogram mel = ComputeMelSpectrogram(Sine(1000.0, 1.0, 8000, 0.5));
  for (int t = 0; t < mel.n_frames; ++t) {
    int arg = 0;
    for (int m = 1; m < 32; ++m)
      if (mel.at(t, m) > mel.at(t, arg)) arg = m;
    CHECK(arg == nearest);
  }
}

TEST_CASE("mel: filterbank rows have unit peak and lie within 0-4 kHz") {
  const auto bank = MelFilterbank(FrontendConfig{}, 8000);
  REQUIRE(bank.size() == 32);
  for (const auto &row : bank) {
    REQUIRE(row.size() == 129);
    CHECK(*std::max_element(row.begin(), row.end()) <= 1.0);
    CHECK(*std::max_element(row.begin(), row.end()) > 0.5);
    CHECK(row.back() == 0.0);
  }
}

TEST_CASE("mel: shorter than one window") {
  CHECK(KindOf([] { ComputeMelSpectrogram(Silence(159.0 / 8000)); }) == ErrorKind::kTooShort);
}

TEST_CASE("segment: counts") {
  CHECK(CountSegments(999, FrontendConfig{}) == 41);
  for (int n : {33, 56, 57, 999}) {
    MelSpectrogram mel;
    mel.n_frames = n;
    mel.n_mels = 32;
    mel.data.assign(static_cast<std::size_t>(n) * 32, 0.0f);
    for (std::size_t i = 0; i < mel.data.size(); ++i) mel.data[i] = static_cast<float>(i % 97);
    CHECK(Segment(mel).n_seg == BruteForceSegments(n));
  }
  CHECK(BruteForceSegments(56) == 1);
  CHECK(BruteForceSegments(57) == 2);
  CHECK(BruteForceSegments(999) == 41);
  for (int n = 0; n < 400; ++n) CHECK(CountSegments(n, FrontendConfig{}) == BruteForceSegments(n));
}

TEST_CASE("segment: too few frames") {
  MelSpectrogram mel;
  mel.n_frames = 32;
  mel.n_mels = 32;
  mel.data.assign(32 * 32, 1.0f);
  CHECK(KindOf([&] { Segment(mel); }) == ErrorKind::kTooShort);
}

TEST_CASE("segment: 33 frames give one standardized copy of the input") {
  const MelSpectrogram mel = ComputeMelSpectrogram(Gaussian(160 + 32 * 80, 0.3, 4));
  REQUIRE(mel.n_frames == 33);
  const MelSegments s = Segment(mel);
  REQUIRE(s.n_seg == 1);
  double mean = 0.0, ss = 0.0;
  for (float v : mel.data) mean += v;
  mean /= mel.data.size();
  for (float v : mel.data) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / mel.data.size());
  for (int b = 0; b < 32; ++b)
    for (int j = 0; j < 33; ++j)
      CHECK(s.at(0, b, j) == doctest::Approx((mel.at(j, b) - mean) / sd).epsilon(1e-4));
}

TEST_CASE("property: segment k column j is frame 24k + j") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2800, 30000)(rng);
    const MelSpectrogram mel = ComputeMelSpectrogram(Gaussian(n, 0.1, trial));
    const MelSegments raw = SliceSegments(mel);
    const MelSegments z = Segment(mel);
    REQUIRE(raw.n_seg == CountSegments(mel.n_frames, FrontendConfig{}));
    for (int k = 0; k < raw.n_seg; ++k) {
      double mean = 0.0, ss = 0.0;
      for (int b = 0; b < 32; ++b)
        for (int j = 0; j < 33; ++j) {
          REQUIRE(raw.at(k, b, j) == mel.at(24 * k + j, b));
          mean += z.at(k, b, j);
          ss += static_cast<double>(z.at(k, b, j)) * z.at(k, b, j);
        }
      CHECK(std::fabs(mean / (32 * 33)) < 1e-5);
      CHECK(ss / (32 * 33) == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("property: gain shifts log-mel cells by 2 log10(g); segments are invariant") {
  const AudioClip c = Gaussian(8000, 0.05, 12);
  const MelSpectrogram base = ComputeMelSpectrogram(c);
  const MelSegments zb = ComputeSegments(c);
  for (double g : {0.25, 0.5, 3.0}) {
    AudioClip s = c;
    for (float &v : s.samples) v = static_cast<float>(v * g);
    const MelSpectrogram mel = ComputeMelSpectrogram(s);
    for (std::size_t i = 0; i < mel.data.size(); ++i)
      if (base.data[i] > -6.0) CHECK(mel.data[i] - base.data[i] == doctest::Approx(2.0 * std::log10(g)).epsilon(1e-4));
    const MelSegments zs = ComputeSegments(s);
    for (std::size_t i = 0; i < zs.data.size(); ++i) CHECK(zs.data[i] == doctest::Approx(zb.data[i]).epsilon(1e-3));
  }
}

TEST_CASE("front end: 10 s clip gives 41 segments of 32 x 33") {
  const MelSegments s = ComputeSegments(Gaussian(80000, 0.1, 2));
  CHECK(s.n_seg == 41);
  CHECK(s.n_mels == 32);
  CHECK(s.width == 33);
  CHECK(s.data.size() == 41u * 32 * 33);
  for (float v : s.data) CHECK(std::isfinite(v));
}

TEST_CASE("activity: continuous sine is fully active") {
  const ActivityResult r = SpeechActivity(Sine(1000.0, 2.0, 8000, 1.0));
  CHECK(r.activity_factor >= 0.99);
  // Active level of a full-scale sine: 10 log10(0.5).
  CHECK(r.active_speech_level_db == doctest::Approx(10.0 * std::log10(0.5)).epsilon(0.01));
}

TEST_CASE("activity: one second of sine then one of silence") {
  AudioClip c = Sine(1000.0, 1.0, 8000, 1.0);
  const AudioClip tail = Silence(1.0);
  c.samples.insert(c.samples.end(), tail.samples.begin(), tail.samples.end());
  const ActivityResult r = SpeechActivity(c);

  // Sample-count oracle.  The envelope settles at mean|sin| = 2/pi; after the
  // tone stops it decays with the 30 ms constant until it crosses the
  // threshold, then the 200 ms hangover runs.  The threshold sits 15.9 dB
  // below the active level, which depends on the count: iterate.
  const double fs = 8000.0, tau = 0.030, env = 2.0 / std::numbers::pi;
  const double energy = 0.5 * fs;
  double active = fs;
  for (int it = 0; it < 50; ++it) {
    const double level_db = 10.0 * std::log10(energy / active);
    const double th = std::pow(10.0, (level_db - 15.9) / 20.0);
    const double rise = -tau * std::log(1.0 - th / env);
    const double decay = tau * std::log(env / th);
    active = fs * (1.0 - rise + decay + 0.200);
  }
  const double oracle = active / (2.0 * fs);
  CHECK(std::fabs(r.activity_factor - oracle) < 0.01);
  // The hangover alone accounts for 0.1; the decay adds the rest.
  CHECK(r.activity_factor > 0.6);
}

TEST_CASE("activity: silence is an error") {
  CHECK(KindOf([] { SpeechActivity(Silence(1.0)); }) == ErrorKind::kNoSpeech);
  AudioClip empty;
  CHECK(KindOf([&] { SpeechActivity(empty); }) == ErrorKind::kEmptyAudio);
}

TEST_CASE("property: leading silence never raises the activity factor") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    AudioClip c = Sine(300.0 + 50 * trial, 1.0, 8000, 0.5);
    // Random on/off gating.
    std::uniform_int_distribution<int> pick(0, 1);
    for (std::size_t i = 0; i < c.samples.size(); i += 800)
      if (pick(rng))
        for (std::size_t j = i; j < std::min(i + 800, c.samples.size()); ++j) c.samples[j] = 0.0f;
    c.samples[0] = 0.5f;
    double prev = SpeechActivity(c).activity_factor;
    for (double pad : {0.1, 0.5, 1.0}) {
      AudioClip p = Silence(pad);
      p.samples.insert(p.samples.end(), c.samples.begin(), c.samples.end());
      const double a = SpeechActivity(p).activity_factor;
      CHECK(a <= prev + 1e-12);
      prev = a;
    }
  }
}

TEST_CASE("property: trailing silence never raises the activity factor once the clip has gone quiet") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 15; ++trial) {
    AudioClip c = Gaussian(8000, 0.2, 100 + trial);
    std::uniform_int_distribution<int> pick(0, 1);
    for (std::size_t i = 0; i < c.samples.size(); i += 800)
      if (pick(rng))
        for (std::size_t j = i; j < std::min(i + 800, c.samples.size()); ++j) c.samples[j] = 0.0f;
    const AudioClip quiet = Silence(0.3);
    c.samples.insert(c.samples.end(), quiet.samples.begin(), quiet.samples.end());
    double prev = SpeechActivity(c).activity_factor;
    for (double pad : {0.1, 0.5, 1.0}) {
      AudioClip p = c;
      const AudioClip s = Silence(pad);
      p.samples.insert(p.samples.end(), s.samples.begin(), s.samples.end());
      const double a = SpeechActivity(p).activity_factor;
      CHECK(a <= prev + 1e-12);
      prev = a;
    }
  }
}
