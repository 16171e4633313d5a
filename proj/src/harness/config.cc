// src/harness/config.cc

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

#include <fstream>
#include <numeric>

#include "sqm/error.h"
#include "sqm/harness.h"

namespace sqm {

namespace {

template <typename T>
void Get(const nlohmann::json &j, const char *key, T *out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kFormat, std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

const char *ExperimentKindName(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kRatingsSweep: return "ratings_sweep";
    case ExperimentKind::kSizeSweep: return "size_sweep";
    case ExperimentKind::kGroupMatrix: return "group_matrix";
    case ExperimentKind::kCropping: return "cropping";
  }
  return "?";
}

ExperimentKind ParseExperimentKind(const std::string &name) {
  for (auto k : {ExperimentKind::kRatingsSweep, ExperimentKind::kSizeSweep,
                 ExperimentKind::kGroupMatrix, ExperimentKind::kCropping})
    if (name == ExperimentKindName(k)) return k;
  Fail(ErrorKind::kFormat, "unknown experiment kind '" + name + "'");
}

void ExperimentConfig::Validate() const {
  if (repeats < 1) Fail(ErrorKind::kInvalidArgument, "repeats must be >= 1");
  train_cfg.Validate();
  switch (kind) {
    case ExperimentKind::kRatingsSweep: {
      if (ratings_grid.empty() && (ratings_lo < 1 || ratings_hi < ratings_lo))
        Fail(ErrorKind::kInvalidArgument, "ratings range must satisfy 1 <= lo <= hi");
      for (int k : ratings_grid)
        if (k < 1) Fail(ErrorKind::kInvalidArgument, "ratings grid values must be >= 1");
      break;
    }
    case ExperimentKind::kSizeSweep:
      if (size_grid.empty()) Fail(ErrorKind::kInvalidArgument, "size grid is empty");
      for (int s : size_grid)
        if (s < 1) Fail(ErrorKind::kInvalidArgument, "size grid values must be >= 1");
      break;
    case ExperimentKind::kGroupMatrix:
      if (groups.empty()) Fail(ErrorKind::kInvalidArgument, "group list is empty");
      break;
    case ExperimentKind::kCropping:
      if (cropping.pairs < 2) Fail(ErrorKind::kInvalidArgument, "cropping needs >= 2 pairs");
      break;
  }
}

std::vector<int> ExperimentConfig::RatingsGrid() const {
  if (!ratings_grid.empty()) return ratings_grid;
  std::vector<int> grid(static_cast<std::size_t>(std::max(0, ratings_hi - ratings_lo + 1)));
  std::iota(grid.begin(), grid.end(), ratings_lo);
  return grid;
}

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json &j) {
  if (!j.is_object()) Fail(ErrorKind::kFormat, "experiment config must be a JSON object");
  ExperimentConfig cfg;
  std::string kind;
  Get(j, "kind", &kind);
  if (kind.empty()) Fail(ErrorKind::kFormat, "experiment config lacks 'kind'");
  cfg.kind = ParseExperimentKind(kind);
  Get(j, "repeats", &cfg.repeats);
  if (j.contains("ratings_range")) {
    std::vector<int> range;
    Get(j, "ratings_range", &range);
    if (range.size() != 2) Fail(ErrorKind::kFormat, "ratings_range must be [lo, hi]");
    cfg.ratings_lo = range[0];
    cfg.ratings_hi = range[1];
  }
  Get(j, "ratings_grid", &cfg.ratings_grid);
  Get(j, "ratings_train_size", &cfg.ratings_train_size);
  Get(j, "size_grid", &cfg.size_grid);
  if (j.contains("groups")) {
    for (const auto &g : j.at("groups")) {
      GroupSpec spec;
      Get(g, "n_files", &spec.n_files);
      Get(g, "n_ratings", &spec.n_ratings);
      cfg.groups.push_back(spec);
    }
  }
  Get(j, "base_seed", &cfg.base_seed);
  if (j.contains("train")) {
    const auto &t = j.at("train");
    Get(t, "lr", &cfg.train_cfg.lr);
    Get(t, "batch_size", &cfg.train_cfg.batch_size);
    Get(t, "max_epochs", &cfg.train_cfg.max_epochs);
    Get(t, "patience", &cfg.train_cfg.patience);
    Get(t, "dropout_rate", &cfg.train_cfg.dropout_rate);
  }
  if (j.contains("cropping")) {
    const auto &c = j.at("cropping");
    Get(c, "pairs", &cfg.cropping.pairs);
    Get(c, "mos_shift", &cfg.cropping.mos_shift);
    Get(c, "rater_sd", &cfg.cropping.rater_sd);
    Get(c, "n_ratings", &cfg.cropping.n_ratings);
  }
  if (j.contains("synthetic")) {
    const auto &s = j.at("synthetic");
    SyntheticConfig sc;
    Get(s, "n_speakers", &sc.n_speakers);
    Get(s, "clips_per_speaker", &sc.clips_per_speaker);
    Get(s, "clip_seconds", &sc.clip_seconds);
    Get(s, "n_ratings", &sc.n_ratings);
    Get(s, "rater_sd", &sc.rater_sd);
    Get(s, "seed", &sc.seed);
    cfg.synthetic = sc;
  }
  Get(j, "n_val_speakers", &cfg.n_val_speakers);
  Get(j, "manifest", &cfg.manifest_path);
  Get(j, "ratings", &cfg.ratings_path);
  Get(j, "output", &cfg.output_path);
  Get(j, "threads", &cfg.threads);
  cfg.Validate();
  return cfg;
}

nlohmann::json ExperimentConfigToJson(const ExperimentConfig &cfg) {
  nlohmann::json j;
  j["kind"] = ExperimentKindName(cfg.kind);
  j["repeats"] = cfg.repeats;
  j["ratings_range"] = {cfg.ratings_lo, cfg.ratings_hi};
  j["ratings_grid"] = cfg.ratings_grid;
  j["ratings_train_size"] = cfg.ratings_train_size;
  j["size_grid"] = cfg.size_grid;
  j["groups"] = nlohmann::json::array();
  for (const auto &g : cfg.groups) j["groups"].push_back({{"n_files", g.n_files}, {"n_ratings", g.n_ratings}});
  j["base_seed"] = cfg.base_seed;
  j["train"] = {{"lr", cfg.train_cfg.lr},
                {"batch_size", cfg.train_cfg.batch_size},
                {"max_epochs", cfg.train_cfg.max_epochs},
                {"patience", cfg.train_cfg.patience},
                {"dropout_rate", cfg.train_cfg.dropout_rate}};
  j["cropping"] = {{"pairs", cfg.cropping.pairs},
                   {"mos_shift", cfg.cropping.mos_shift},
                   {"rater_sd", cfg.cropping.rater_sd},
                   {"n_ratings", cfg.cropping.n_ratings}};
  if (cfg.synthetic) {
    const auto &s = *cfg.synthetic;
    j["synthetic"] = {{"n_speakers", s.n_speakers},     {"clips_per_speaker", s.clips_per_speaker},
                      {"clip_seconds", s.clip_seconds}, {"n_ratings", s.n_ratings},
                      {"rater_sd", s.rater_sd},         {"seed", s.seed}};
  }
  j["n_val_speakers"] = cfg.n_val_speakers;
  if (!cfg.manifest_path.empty()) j["manifest"] = cfg.manifest_path;
  if (!cfg.ratings_path.empty()) j["ratings"] = cfg.ratings_path;
  if (!cfg.output_path.empty()) j["output"] = cfg.output_path;
  j["threads"] = cfg.threads;
  return j;
}

ExperimentConfig ReadExperimentConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kFormat, path + ": " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

}  // namespace sqm
