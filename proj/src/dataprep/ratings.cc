// src/dataprep/ratings.cc

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
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "sqm/dataprep.h"
#include "sqm/error.h"

namespace sqm {

MosLabel AggregateMos(const RatingRecord &r) {
  if (r.ratings.empty())
    Fail(ErrorKind::kEmptyRatings, "clip '" + r.clip_id + "' has no ratings");
  for (int v : r.ratings)
    if (v < 1 || v > 5)
      Fail(ErrorKind::kInvalidArgument,
           "rating " + std::to_string(v) + " for clip '" + r.clip_id + "' outside 1..5");
  const double n = static_cast<double>(r.ratings.size());
  double sum = 0.0;
  for (int v : r.ratings) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (int v : r.ratings) ss += (v - mean) * (v - mean);

  MosLabel label;
  label.clip_id = r.clip_id;
  label.mos = mean;
  label.n_ratings = static_cast<int>(r.ratings.size());
  label.ci95 = r.ratings.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return label;
}

MosLabel SubsampleRatings(const RatingRecord &r, int k, std::uint64_t rng_seed) {
  if (k < 1 || static_cast<std::size_t>(k) > r.ratings.size())
    Fail(ErrorKind::kInvalidK, "cannot draw " + std::to_string(k) + " of " +
                                   std::to_string(r.ratings.size()) + " ratings for clip '" +
                                   r.clip_id + "'");
  std::vector<int> pool = r.ratings;
  std::mt19937_64 rng(rng_seed);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
  }
  RatingRecord sub{r.clip_id, std::vector<int>(pool.begin(), pool.begin() + k)};
  return AggregateMos(sub);
}

RatingRecord SimulateRatings(double true_mos, int n, double rater_sd,
                             std::uint64_t rng_seed) {
  if (n < 1) Fail(ErrorKind::kInvalidArgument, "need at least one rating");
  if (!(rater_sd >= 0.0)) Fail(ErrorKind::kInvalidArgument, "rater sd must be >= 0");
  if (!(true_mos >= 1.0 && true_mos <= 5.0))
    Fail(ErrorKind::kInvalidArgument, "true MOS must lie in [1, 5]");
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  RatingRecord r;
  r.ratings.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v = std::round(true_mos + rater_sd * noise(rng));
    r.ratings.push_back(static_cast<int>(std::clamp(v, 1.0, 5.0)));
  }
  return r;
}

int UniformBinOf(double mos) {
  if (mos >= 1.5 && mos < 2.5) return 0;
  if (mos >= 2.5 && mos < 3.5) return 1;
  if (mos >= 3.5 && mos <= 4.5) return 2;
  return -1;
}

std::vector<std::string> SampleUniformSubset(const std::vector<MosLabel> &labels,
                                             std::uint64_t rng_seed) {
  std::array<std::vector<std::size_t>, kUniformBins> bins;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int b = UniformBinOf(labels[i].mos);
    if (b >= 0) bins[static_cast<std::size_t>(b)].push_back(i);
  }
  static constexpr const char *kBinNames[] = {"[1.5, 2.5)", "[2.5, 3.5)", "[3.5, 4.5]"};
  for (int b = 0; b < kUniformBins; ++b)
    if (bins[static_cast<std::size_t>(b)].size() < static_cast<std::size_t>(kPerBin))
      Fail(ErrorKind::kInsufficientBin,
           std::string("MOS bin ") + kBinNames[b] + " holds " +
               std::to_string(bins[static_cast<std::size_t>(b)].size()) + " labels, need " +
               std::to_string(kPerBin));

  std::mt19937_64 rng(rng_seed);
  std::vector<std::string> ids;
  ids.reserve(kUniformBins * kPerBin);
  for (auto &bin : bins) {
    for (int i = 0; i < kPerBin; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), bin.size() - 1);
      std::swap(bin[static_cast<std::size_t>(i)], bin[pick(rng)]);
      ids.push_back(labels[bin[static_cast<std::size_t>(i)]].clip_id);
    }
  }
  return ids;
}

Manifest SplitBySpeaker(const Manifest &manifest, int n_val_speakers,
                        std::uint64_t rng_seed) {
  std::set<std::string> speaker_set;
  for (const auto &e : manifest.entries)
    if (e.split != Split::kTest) speaker_set.insert(e.speaker_id);
  std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());
  if (n_val_speakers < 0 || static_cast<std::size_t>(n_val_speakers) >= speakers.size())
    Fail(ErrorKind::kInvalidSplit,
         "cannot hold out " + std::to_string(n_val_speakers) + " of " +
             std::to_string(speakers.size()) + " speakers");

  std::mt19937_64 rng(rng_seed);
  for (int i = 0; i < n_val_speakers; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                    speakers.size() - 1);
    std::swap(speakers[static_cast<std::size_t>(i)], speakers[pick(rng)]);
  }
  const std::set<std::string> val(speakers.begin(), speakers.begin() + n_val_speakers);

  Manifest out = manifest;
  for (auto &e : out.entries) {
    if (e.split == Split::kTest) continue;
    e.split = val.count(e.speaker_id) ? Split::kVal : Split::kTrain;
  }
  return out;
}

void Manifest::Validate() const {
  std::set<std::string> ids;
  std::map<std::string, Split> speaker_split;
  for (const auto &e : entries) {
    if (!ids.insert(e.clip_id).second)
      Fail(ErrorKind::kInvalidArgument, "duplicate clip id '" + e.clip_id + "'");
    if (e.split == Split::kTest) continue;
    auto [it, inserted] = speaker_split.emplace(e.speaker_id, e.split);
    if (!inserted && it->second != e.split)
      Fail(ErrorKind::kInvalidArgument,
           "speaker '" + e.speaker_id + "' appears in both train and val");
  }
}

std::vector<const ManifestEntry *> Manifest::InSplit(Split s) const {
  std::vector<const ManifestEntry *> out;
  for (const auto &e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

}  // namespace sqm
