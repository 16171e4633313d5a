// sqm/dataprep.h

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

#ifndef SQM_DATAPREP_H_
#define SQM_DATAPREP_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqm/audio.h"

namespace sqm {

// Post-screening ratings of one clip on the 1..5 ACR scale.
struct RatingRecord {
  std::string clip_id;
  std::vector<int> ratings;
};

struct MosLabel {
  std::string clip_id;
  double mos = 0.0;
  double ci95 = 0.0;
  int n_ratings = 0;
};

enum class Split { kTrain, kVal, kTest };

const char *SplitName(Split s);
Split ParseSplit(const std::string &name);

struct ManifestEntry {
  std::string clip_id;
  std::string file_path;
  std::string speaker_id;
  std::string sentence_id;
  Condition condition = Condition::kClean;
  std::optional<double> snr_db;
  Split split = Split::kTrain;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  // Throws kInvalidArgument on duplicate clip ids or train/val speaker overlap.
  void Validate() const;
  std::vector<const ManifestEntry *> InSplit(Split s) const;
};

// ---- noise mixing and clip extraction -------------------------------------

// Adds `noise` to `speech` so that the active speech level (P.56-style) sits
// `snr_db` above the mean noise power.  The noise is looped to the speech
// length starting at a seeded random circular offset.  A mixture whose peak
// exceeds 1 is rescaled to a 0.999 peak and the factor lands in mix_scale.
AudioClip MixNoise(const AudioClip &speech, const AudioClip &noise, double snr_db,
                   std::uint64_t rng_seed);

// Uniformly placed 10 s window with activity >= 0.5, up to 100 draws.
AudioClip ExtractClip(const AudioClip &source, std::uint64_t rng_seed);

inline constexpr double kClipSeconds = 10.0;
inline constexpr int kMaxExtractAttempts = 100;
inline constexpr double kMinActivity = 0.5;

// ---- splits ----------------------------------------------------------------

// Draws n_val_speakers of the non-test speakers for validation; every other
// non-test entry becomes train.  Test entries keep their split.
Manifest SplitBySpeaker(const Manifest &manifest, int n_val_speakers,
                        std::uint64_t rng_seed);

// ---- ratings ---------------------------------------------------------------

MosLabel AggregateMos(const RatingRecord &r);
MosLabel SubsampleRatings(const RatingRecord &r, int k, std::uint64_t rng_seed);
RatingRecord SimulateRatings(double true_mos, int n, double rater_sd,
                             std::uint64_t rng_seed);

// MOS bins [1.5, 2.5), [2.5, 3.5), [3.5, 4.5] with 13 draws each.
inline constexpr int kUniformBins = 3;
inline constexpr int kPerBin = 13;
std::vector<std::string> SampleUniformSubset(const std::vector<MosLabel> &labels,
                                             std::uint64_t rng_seed);
// Bin index for the uniform subset, or -1 when outside [1.5, 4.5].
int UniformBinOf(double mos);

// ---- CSV interfaces ----------------------------------------------------------

Manifest ReadManifestCsv(const std::string &path);
void WriteManifestCsv(const std::string &path, const Manifest &manifest);
// Rows `clip_id,rating`, grouped by clip id in first-appearance order.
std::vector<RatingRecord> ReadRatingsCsv(const std::string &path);
void WriteRatingsCsv(const std::string &path, const std::vector<RatingRecord> &records);
std::vector<MosLabel> ReadLabelsCsv(const std::string &path);
void WriteLabelsCsv(const std::string &path, const std::vector<MosLabel> &labels);

}  // namespace sqm

#endif  // SQM_DATAPREP_H_
