// sqm/dsp.h

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

#ifndef SQM_DSP_H_
#define SQM_DSP_H_

#include <vector>

#include "sqm/audio.h"

namespace sqm {

struct FrontendConfig {
  double fft_window_ms = 20.0;
  double hop_ms = 10.0;
  int fft_size = 256;
  int n_mels = 32;
  double f_max_hz = 4000.0;
  int segment_width = 33;
  int segment_hop = 24;
  double log_floor = 1e-7;

  // Throws kInvalidArgument when the fields are inconsistent for `sample_rate`.
  void Validate(int sample_rate) const;
  int WindowSamples(int sample_rate) const;
  int HopSamples(int sample_rate) const;
};

// Row-major n_frames x n_mels log10 mel power.
struct MelSpectrogram {
  int n_frames = 0;
  int n_mels = 0;
  std::vector<float> data;

  float at(int frame, int band) const {
    return data[static_cast<std::size_t>(frame) * n_mels + band];
  }
};

// n_seg patches of 1 x n_mels x width.  Row = mel band, column = frame.
struct MelSegments {
  int n_seg = 0;
  int n_mels = 0;
  int width = 0;
  std::vector<float> data;

  std::size_t patch_size() const {
    return static_cast<std::size_t>(n_mels) * width;
  }
  float at(int seg, int band, int col) const {
    return data[seg * patch_size() + static_cast<std::size_t>(band) * width + col];
  }
  const float *patch(int seg) const { return data.data() + seg * patch_size(); }
};

struct ActivityResult {
  double active_speech_level_db = 0.0;  // dBov
  double activity_factor = 0.0;
};

// Number of frames for `n_samples` input samples; 0 if shorter than one window.
int CountFrames(std::size_t n_samples, const FrontendConfig &cfg, int sample_rate);
// Number of full segments for `n_frames`; 0 if fewer than segment_width.
int CountSegments(int n_frames, const FrontendConfig &cfg);

// Triangular mel filterbank (HTK mel scale, unit peak), n_mels x (fft_size/2+1).
std::vector<std::vector<double>> MelFilterbank(const FrontendConfig &cfg, int sample_rate);
// Center frequency in Hz of each mel filter.
std::vector<double> MelCenterFrequencies(const FrontendConfig &cfg);

MelSpectrogram ComputeMelSpectrogram(const AudioClip &clip,
                                     const FrontendConfig &cfg = {});

// Slices the spectrogram into overlapping patches and standardizes each one
// to zero mean and unit variance (variance floored at 1e-6).
MelSegments Segment(const MelSpectrogram &mel, const FrontendConfig &cfg = {});

// Unstandardized slicing; Segment() is this followed by per-patch
// standardization.
MelSegments SliceSegments(const MelSpectrogram &mel, const FrontendConfig &cfg = {});

// Convenience: canonical clip -> segments.
MelSegments ComputeSegments(const AudioClip &clip, const FrontendConfig &cfg = {});

// Active speech level and activity factor.  Envelope threshold scan with a
// 30 ms smoothing constant, 200 ms hangover and 15.9 dB margin.
ActivityResult SpeechActivity(const AudioClip &clip);

}  // namespace sqm

#endif  // SQM_DSP_H_
