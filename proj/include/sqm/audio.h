// sqm/audio.h

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

#ifndef SQM_AUDIO_H_
#define SQM_AUDIO_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqm {

inline constexpr int kCanonicalRate = 8000;

enum class Condition { kClean, kNoisy, kRealCall };

const char *ConditionName(Condition c);
// Accepts "clean", "noisy", "real_call"; throws kInvalidArgument otherwise.
Condition ParseCondition(const std::string &name);

// Mono PCM clip.  Samples live in [-1, 1]; after canonicalization the rate is
// always kCanonicalRate.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = kCanonicalRate;
  std::string clip_id;
  std::string speaker_id;
  std::string sentence_id;
  Condition condition = Condition::kClean;
  std::optional<double> snr_db;      // set iff condition == kNoisy
  std::optional<double> mix_scale;   // peak-protection gain applied by mixing

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// RIFF/WAVE PCM16, 1 or 2 channels.  Stereo is averaged to mono and samples
// are scaled by 1/32768.  Metadata fields are left empty.
AudioClip DecodeWav(std::span<const std::uint8_t> bytes);

// Mono PCM16 at the clip's sample rate.  Samples are rounded to the nearest
// 16-bit step and saturated, so DecodeWav(EncodeWav(DecodeWav(b))) equals
// DecodeWav(b) for any mono PCM16 input.
std::vector<std::uint8_t> EncodeWav(const AudioClip &clip);

AudioClip ReadWavFile(const std::string &path);
void WriteWavFile(const std::string &path, const AudioClip &clip);

// Kaiser-windowed sinc low-pass at 3.9 kHz followed by rational resampling to
// 8 kHz.  Supported sources: 8, 16, 32, 44.1 and 48 kHz.  8 kHz input is
// passed through untouched.
AudioClip ResampleTo8k(const AudioClip &clip);

// Sample-accurate slice [round(start_s*fs), round((start_s+dur_s)*fs)).
AudioClip CropClip(const AudioClip &clip, double start_s, double dur_s);

}  // namespace sqm

#endif  // SQM_AUDIO_H_
