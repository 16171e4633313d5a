// src/dsp/mel.cc

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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "sqm/dsp.h"
#include "sqm/error.h"

namespace sqm {

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// FFTW planning is not reentrant; execution on fresh aligned buffers is.
fftw_plan PlanFor(int n) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  double *in = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex *out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, p);
  return p;
}

struct FftwFree {
  void operator()(void *p) const { fftw_free(p); }
};

}  // namespace

void FrontendConfig::Validate(int sample_rate) const {
  if (!(segment_width > segment_hop && segment_hop > 0))
    Fail(ErrorKind::kInvalidArgument, "segment_width must exceed segment_hop > 0");
  if (f_max_hz > sample_rate / 2.0 || f_max_hz <= 0)
    Fail(ErrorKind::kInvalidArgument, "f_max_hz must lie in (0, fs/2]");
  if (n_mels < 1 || fft_size < 2 || log_floor <= 0)
    Fail(ErrorKind::kInvalidArgument, "invalid front-end configuration");
  if (WindowSamples(sample_rate) > fft_size || HopSamples(sample_rate) < 1)
    Fail(ErrorKind::kInvalidArgument, "analysis window longer than FFT size");
}

int FrontendConfig::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(fft_window_ms * 1e-3 * sample_rate));
}

int FrontendConfig::HopSamples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate));
}

int CountFrames(std::size_t n_samples, const FrontendConfig &cfg, int sample_rate) {
  const std::size_t win = static_cast<std::size_t>(cfg.WindowSamples(sample_rate));
  const std::size_t hop = static_cast<std::size_t>(cfg.HopSamples(sample_rate));
  if (n_samples < win) return 0;
  return static_cast<int>((n_samples - win) / hop + 1);
}

int CountSegments(int n_frames, const FrontendConfig &cfg) {
  if (n_frames < cfg.segment_width) return 0;
  return (n_frames - cfg.segment_width) / cfg.segment_hop + 1;
}

std::vector<double> MelCenterFrequencies(const FrontendConfig &cfg) {
  const double mel_max = HzToMel(cfg.f_max_hz);
  std::vector<double> centers(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m)
    centers[static_cast<std::size_t>(m)] = MelToHz(mel_max * (m + 1) / (cfg.n_mels + 1));
  return centers;
}

std::vector<std::vector<double>> MelFilterbank(const FrontendConfig &cfg, int sample_rate) {
  const int n_bins = cfg.fft_size / 2 + 1;
  const double mel_max = HzToMel(cfg.f_max_hz);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[static_cast<std::size_t>(i)] = MelToHz(mel_max * i / (cfg.n_mels + 1));

  std::vector<std::vector<double>> bank(static_cast<std::size_t>(cfg.n_mels),
                                        std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = w;
    }
  }
  return bank;
}

MelSpectrogram ComputeMelSpectrogram(const AudioClip &clip, const FrontendConfig &cfg) {
  const int fs = clip.sample_rate_hz;
  cfg.Validate(fs);
  const int win = cfg.WindowSamples(fs);
  const int hop = cfg.HopSamples(fs);
  const int n_frames = CountFrames(clip.samples.size(), cfg, fs);
  if (n_frames == 0)
    Fail(ErrorKind::kTooShort, "clip has " + std::to_string(clip.samples.size()) +
                                   " samples, shorter than one " +
                                   std::to_string(win) + "-sample window");

  // Periodic Hann.
  std::vector<double> window(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    window[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);

  const auto bank = MelFilterbank(cfg, fs);
  const int n_bins = cfg.fft_size / 2 + 1;
  // Restrict each filter to its non-zero bin range.
  std::vector<std::pair<int, int>> support(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const auto &row = bank[static_cast<std::size_t>(m)];
    int first = n_bins, last = -1;
    for (int k = 0; k < n_bins; ++k) {
      if (row[static_cast<std::size_t>(k)] != 0.0) {
        first = std::min(first, k);
        last = k;
      }
    }
    support[static_cast<std::size_t>(m)] = {first, last + 1};
  }

  fftw_plan plan = PlanFor(cfg.fft_size);
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(static_cast<std::size_t>(cfg.fft_size)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      fftw_alloc_complex(static_cast<std::size_t>(n_bins)));
  std::vector<double> power(static_cast<std::size_t>(n_bins));

  MelSpectrogram mel;
  mel.n_frames = n_frames;
  mel.n_mels = cfg.n_mels;
  mel.data.resize(static_cast<std::size_t>(n_frames) * cfg.n_mels);
  for (int t = 0; t < n_frames; ++t) {
    const float *x = clip.samples.data() + static_cast<std::size_t>(t) * hop;
    std::fill(in.get(), in.get() + cfg.fft_size, 0.0);
    for (int i = 0; i < win; ++i) in.get()[i] = window[static_cast<std::size_t>(i)] * x[i];
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (int k = 0; k < n_bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      power[static_cast<std::size_t>(k)] = re * re + im * im;
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      const auto &row = bank[static_cast<std::size_t>(m)];
      double e = 0.0;
      for (int k = support[static_cast<std::size_t>(m)].first;
           k < support[static_cast<std::size_t>(m)].second; ++k)
        e += row[static_cast<std::size_t>(k)] * power[static_cast<std::size_t>(k)];
      mel.data[static_cast<std::size_t>(t) * cfg.n_mels + m] =
          static_cast<float>(std::log10(std::max(e, cfg.log_floor)));
    }
  }
  return mel;
}

MelSegments SliceSegments(const MelSpectrogram &mel, const FrontendConfig &cfg) {
  const int n_seg = CountSegments(mel.n_frames, cfg);
  if (n_seg == 0)
    Fail(ErrorKind::kTooShort, std::to_string(mel.n_frames) +
                                   " frames cannot fill one " +
                                   std::to_string(cfg.segment_width) + "-frame segment");
  MelSegments seg;
  seg.n_seg = n_seg;
  seg.n_mels = mel.n_mels;
  seg.width = cfg.segment_width;
  seg.data.resize(static_cast<std::size_t>(n_seg) * seg.patch_size());
  for (int k = 0; k < n_seg; ++k) {
    float *patch = seg.data.data() + k * seg.patch_size();
    for (int band = 0; band < mel.n_mels; ++band)
      for (int j = 0; j < cfg.segment_width; ++j)
        patch[static_cast<std::size_t>(band) * seg.width + j] =
            mel.at(k * cfg.segment_hop + j, band);
  }
  return seg;
}

MelSegments Segment(const MelSpectrogram &mel, const FrontendConfig &cfg) {
  MelSegments seg = SliceSegments(mel, cfg);
  const std::size_t n = seg.patch_size();
  for (int k = 0; k < seg.n_seg; ++k) {
    float *patch = seg.data.data() + k * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += patch[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (patch[i] - mean) * (patch[i] - mean);
    var /= static_cast<double>(n);
    const double inv_sd = 1.0 / std::sqrt(std::max(var, 1e-6));
    for (std::size_t i = 0; i < n; ++i)
      patch[i] = static_cast<float>((patch[i] - mean) * inv_sd);
  }
  return seg;
}

MelSegments ComputeSegments(const AudioClip &clip, const FrontendConfig &cfg) {
  return Segment(ComputeMelSpectrogram(clip, cfg), cfg);
}

}  // namespace sqm
