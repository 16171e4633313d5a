// src/eval/evaluate.cc

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
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "sqm/error.h"
#include "sqm/eval.h"

namespace sqm {

int ThreadsFromEnv() {
  const char *v = std::getenv("SQM_THREADS");
  if (!v || !*v) return 1;
  const int n = std::atoi(v);
  return std::max(1, n);
}

double ModelPredictor::Predict(const std::string &, const MelSegments &segments) const {
  return static_cast<double>(model_.Predict(segments));
}

EvalReport BuildReport(std::string dataset_name, std::vector<ClipPrediction> clips,
                       const EvaluateOptions &options) {
  std::sort(clips.begin(), clips.end(),
            [](const ClipPrediction &a, const ClipPrediction &b) { return a.clip_id < b.clip_id; });
  EvalReport report;
  report.dataset_name = std::move(dataset_name);
  report.n = static_cast<int>(clips.size());
  std::vector<double> mos, pred;
  for (const auto &c : clips) {
    mos.push_back(c.mos);
    pred.push_back(c.prediction);
  }
  report.mos_histogram = MosHistogram(mos);
  if (!clips.empty()) report.rmse = Rmse(pred, mos);
  try {
    report.pcc = Pearson(pred, mos);
  } catch (const Error &e) {
    report.pcc_error = e.what();
  }
  if (options.uniform_subset) {
    std::map<std::string, double> by_id;
    std::vector<MosLabel> labels;
    for (const auto &c : clips) {
      by_id[c.clip_id] = c.prediction;
      labels.push_back(MosLabel{c.clip_id, c.mos, 0.0, 1});
    }
    report.uniform_subset = UniformSubsetEval(by_id, labels, options.uniform_repeats, options.seed);
  }
  report.clips = std::move(clips);
  return report;
}

EvalReport Evaluate(const MosPredictor &predictor, const Manifest &manifest,
                    const std::vector<MosLabel> &labels, const EvaluateOptions &options) {
  std::map<std::string, double> mos;
  for (const auto &l : labels) mos[l.clip_id] = l.mos;

  std::vector<const ManifestEntry *> entries;
  for (const auto &e : manifest.entries) {
    if (options.split && e.split != *options.split) continue;
    if (!mos.count(e.clip_id))
      Fail(ErrorKind::kMissingLabel, "no label for clip '" + e.clip_id + "'");
    entries.push_back(&e);
  }
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry *a, const ManifestEntry *b) { return a->clip_id < b->clip_id; });

  struct Slot {
    std::optional<double> prediction;
    std::string error;
    ErrorKind kind = ErrorKind::kFormat;
  };
  std::vector<Slot> slots(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        AudioClip clip = ResampleTo8k(ReadWavFile(entries[i]->file_path));
        const MelSegments seg = ComputeSegments(clip, options.frontend);
        slots[i].prediction = predictor.Predict(entries[i]->clip_id, seg);
      } catch (const Error &e) {
        slots[i].error = e.what();
        slots[i].kind = e.kind();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(entries.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }

  std::vector<ClipPrediction> clips;
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (slots[i].prediction) {
      clips.push_back({entries[i]->clip_id, mos[entries[i]->clip_id], *slots[i].prediction});
      continue;
    }
    const std::string msg = entries[i]->clip_id + ": " + slots[i].error;
    if (!options.skip_bad) throw Error(slots[i].kind, msg);
    failures.push_back(msg);
  }
  EvalReport report = BuildReport(options.dataset_name, std::move(clips), options);
  report.failures = std::move(failures);
  return report;
}

nlohmann::json ReportToJson(const EvalReport &report) {
  nlohmann::json j;
  j["dataset_name"] = report.dataset_name;
  j["n"] = report.n;
  if (report.pcc) {
    j["pcc"] = *report.pcc;
  } else {
    j["pcc"] = nullptr;
    j["pcc_error"] = report.pcc_error;
  }
  j["rmse"] = report.rmse;
  nlohmann::json hist;
  for (int b = 0; b < kHistogramBins; ++b) {
    hist.push_back({{"lo", 1.0 + 0.5 * b}, {"hi", 1.5 + 0.5 * b},
                    {"count", report.mos_histogram[static_cast<std::size_t>(b)]}});
  }
  j["mos_histogram"] = hist;
  if (report.uniform_subset) {
    j["uniform_subset"] = {{"repeats", report.uniform_subset->repeats},
                           {"mean_pcc", report.uniform_subset->mean_pcc},
                           {"sd_pcc", report.uniform_subset->sd_pcc}};
  } else {
    j["uniform_subset"] = nullptr;
  }
  j["failures"] = report.failures;
  return j;
}

void WriteReportJson(const std::string &path, const EvalReport &report) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out << ReportToJson(report).dump(2) << '\n';
}

void WritePredictionsCsv(const std::string &path, const EvalReport &report) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out << "clip_id,mos,prediction\n";
  char buf[96];
  for (const auto &c : report.clips) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", c.mos, c.prediction);
    out << c.clip_id << ',' << buf << '\n';
  }
}

}  // namespace sqm
