// src/harness/synthetic.cc

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

#include "sqm/synthetic.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "sqm/error.h"
#include "sqm/random.h"

namespace sqm {

namespace {

void NormalizeVariance(std::vector<float> *x) {
  double ss = 0.0, mean = 0.0;
  for (float v : *x) mean += v;
  mean /= static_cast<double>(x->size());
  for (float v : *x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(x->size()));
  if (sd == 0.0) return;
  for (float &v : *x) v = static_cast<float>((v - mean) / sd);
}

AudioClip Blank(std::size_t n) {
  AudioClip c;
  c.sample_rate_hz = kCanonicalRate;
  c.samples.assign(n, 0.0f);
  return c;
}

}  // namespace

const char *NoiseTypeName(NoiseType t) {
  switch (t) {
    case NoiseType::kWhite: return "white";
    case NoiseType::kPink: return "pink";
    case NoiseType::kHighpass: return "highpass";
  }
  return "?";
}

AudioClip SynthesizeNoise(NoiseType type, std::size_t n, std::uint64_t seed) {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "noise length must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  AudioClip c = Blank(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = gauss(rng);
    double y = w;
    if (type == NoiseType::kPink) {
      b0 = 0.99765 * b0 + w * 0.0990460;
      b1 = 0.96300 * b1 + w * 0.2965164;
      b2 = 0.57000 * b2 + w * 1.0526913;
      y = b0 + b1 + b2 + w * 0.1848;
    } else if (type == NoiseType::kHighpass) {
      y = w - prev;
      prev = w;
    }
    c.samples[i] = static_cast<float>(y);
  }
  NormalizeVariance(&c.samples);
  c.clip_id = std::string("noise_") + NoiseTypeName(type);
  return c;
}

AudioClip SynthesizeSpeech(double f0_hz, double seconds, std::uint64_t seed) {
  if (!(f0_hz > 0.0) || !(seconds > 0.0))
    Fail(ErrorKind::kInvalidArgument, "speech synthesis needs positive pitch and duration");
  const double fs = kCanonicalRate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  AudioClip c = Blank(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double ramp = 0.02 * fs;

  std::size_t pos = static_cast<std::size_t>(u(rng) * 0.1 * fs);
  std::vector<double> phase(64, 0.0);
  while (pos < n) {
    const auto len = static_cast<std::size_t>((0.12 + 0.18 * u(rng)) * fs);
    const double f1 = 300.0 + 500.0 * u(rng);
    const double f2 = 900.0 + 1600.0 * u(rng);
    const double amp = 0.5 + 0.5 * u(rng);
    const double glide = 0.15 * (u(rng) - 0.5);
    for (std::size_t k = 0; k < len && pos + k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(len);
      const double f = f0_hz * (1.0 + glide * t);
      double env = 1.0;
      if (k < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * k / ramp);
      if (len - k < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (len - k) / ramp));
      double s = 0.0;
      for (int h = 1; h < 64 && h * f < 3600.0; ++h) {
        const double fh = h * f;
        const double a = (1.0 + 2.0 * std::exp(-std::pow((fh - f1) / 200.0, 2)) +
                          1.5 * std::exp(-std::pow((fh - f2) / 300.0, 2))) / h;
        phase[h] = std::fmod(phase[h] + kTwoPi * fh / fs, kTwoPi);
        s += a * std::sin(phase[h]);
      }
      c.samples[pos + k] = static_cast<float>(amp * env * s);
    }
    pos += len;
    const double gap = u(rng) < 0.15 ? 0.3 + 0.3 * u(rng) : 0.03 + 0.12 * u(rng);
    pos += static_cast<std::size_t>(gap * fs);
  }
  float peak = 0.0f;
  for (float v : c.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0f)
    for (float &v : c.samples) v *= 0.3f / peak;
  return c;
}

double SyntheticTrueMos(double snr_db) { return 1.0 + 0.1 * snr_db; }

std::vector<SyntheticClip> SynthesizeCorpus(const SyntheticConfig &cfg) {
  if (cfg.n_speakers < 1 || cfg.clips_per_speaker < 1 || cfg.n_ratings < 1)
    Fail(ErrorKind::kInvalidArgument, "synthetic corpus needs speakers, clips and ratings");
  const auto n = static_cast<std::size_t>(std::llround(cfg.clip_seconds * kCanonicalRate));
  std::vector<SyntheticClip> out;
  out.reserve(static_cast<std::size_t>(cfg.n_speakers * cfg.clips_per_speaker));
  for (int s = 0; s < cfg.n_speakers; ++s) {
    std::mt19937_64 spk(MixSeed(cfg.seed, {0x5BEA, static_cast<std::uint64_t>(s)}));
    const double f0 = 90.0 + 160.0 * std::uniform_real_distribution<double>(0.0, 1.0)(spk);
    for (int k = 0; k < cfg.clips_per_speaker; ++k) {
      const std::uint64_t cs =
          MixSeed(cfg.seed, {0xC11B, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)});
      std::mt19937_64 rng(cs);
      const double snr =
          std::uniform_real_distribution<double>(cfg.snr_lo_db, cfg.snr_hi_db)(rng);
      const auto type = static_cast<NoiseType>((s * cfg.clips_per_speaker + k) % kNoiseTypes);
      const AudioClip speech = SynthesizeSpeech(f0, cfg.clip_seconds, MixSeed(cs, {1}));
      const AudioClip noise = SynthesizeNoise(type, n, MixSeed(cs, {2}));
      SyntheticClip sc;
      sc.clip = MixNoise(speech, noise, snr, MixSeed(cs, {3}));
      sc.clip.speaker_id = "s" + std::to_string(s);
      sc.clip.clip_id = sc.clip.speaker_id + "_c" + std::to_string(k);
      sc.clip.sentence_id = "c" + std::to_string(k);
      sc.noise = type;
      sc.true_mos = SyntheticTrueMos(snr);
      sc.ratings = SimulateRatings(sc.true_mos, cfg.n_ratings, cfg.rater_sd, MixSeed(cs, {4}));
      sc.ratings.clip_id = sc.clip.clip_id;
      out.push_back(std::move(sc));
    }
  }
  return out;
}

void WriteSyntheticCorpus(const std::string &dir, const std::vector<SyntheticClip> &corpus,
                          int n_val_speakers, std::uint64_t split_seed) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "wav", ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create " + (root / "wav").string());
  Manifest manifest;
  std::vector<RatingRecord> ratings;
  std::vector<MosLabel> labels;
  for (const auto &sc : corpus) {
    const fs::path wav = root / "wav" / (sc.clip.clip_id + ".wav");
    WriteWavFile(wav.string(), sc.clip);
    ManifestEntry e;
    e.clip_id = sc.clip.clip_id;
    e.file_path = wav.string();
    e.speaker_id = sc.clip.speaker_id;
    e.sentence_id = sc.clip.sentence_id;
    e.condition = sc.clip.condition;
    e.snr_db = sc.clip.snr_db;
    manifest.entries.push_back(std::move(e));
    ratings.push_back(sc.ratings);
    labels.push_back(AggregateMos(sc.ratings));
  }
  if (n_val_speakers > 0) manifest = SplitBySpeaker(manifest, n_val_speakers, split_seed);
  WriteManifestCsv((root / "manifest.csv").string(), manifest);
  WriteRatingsCsv((root / "ratings.csv").string(), ratings);
  WriteLabelsCsv((root / "labels.csv").string(), labels);
}

}  // namespace sqm
