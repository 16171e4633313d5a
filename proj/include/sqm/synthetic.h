// sqm/synthetic.h

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

#ifndef SQM_SYNTHETIC_H_
#define SQM_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sqm/audio.h"
#include "sqm/dataprep.h"

namespace sqm {

enum class NoiseType { kWhite, kPink, kHighpass };
inline constexpr int kNoiseTypes = 3;

const char *NoiseTypeName(NoiseType t);

// Gaussian noise of `n` samples at 8 kHz with unit variance.  Pink uses a
// 1/f shaping filter, highpass a first difference.
AudioClip SynthesizeNoise(NoiseType type, std::size_t n, std::uint64_t seed);

// Voiced "speech": harmonic tone complex at the speaker's pitch, formant-like
// spectral shaping per syllable, syllabic on/off envelope and short pauses.
AudioClip SynthesizeSpeech(double f0_hz, double seconds, std::uint64_t seed);

struct SyntheticConfig {
  int n_speakers = 60;
  int clips_per_speaker = 10;
  double clip_seconds = 4.0;
  int n_ratings = 5;
  double rater_sd = 0.5;
  double snr_lo_db = 0.0;
  double snr_hi_db = 40.0;
  std::uint64_t seed = 0;
};

// True MOS for a clip mixed at `snr_db`: 1 + 0.1 * snr, i.e. [1, 5] over
// [0, 40] dB.
double SyntheticTrueMos(double snr_db);

struct SyntheticClip {
  AudioClip clip;  // condition noisy, snr_db set
  NoiseType noise = NoiseType::kWhite;
  double true_mos = 0.0;
  RatingRecord ratings;
};

// Deterministic for a fixed config.  Clip ids are "s<speaker>_c<clip>",
// speaker ids "s<speaker>"; noise types cycle over clips.
std::vector<SyntheticClip> SynthesizeCorpus(const SyntheticConfig &cfg);

// Writes <dir>/wav/<clip_id>.wav plus manifest.csv (all train, unless
// n_val_speakers > 0), ratings.csv and labels.csv.
void WriteSyntheticCorpus(const std::string &dir, const std::vector<SyntheticClip> &corpus,
                          int n_val_speakers, std::uint64_t split_seed);

}  // namespace sqm

#endif  // SQM_SYNTHETIC_H_
