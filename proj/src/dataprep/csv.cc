// src/dataprep/csv.cc

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

#include <boost/tokenizer.hpp>

#include <cstdio>
#include <fstream>
#include <map>

#include "sqm/dataprep.h"
#include "sqm/error.h"

namespace sqm {

namespace {

using Row = std::vector<std::string>;

std::vector<Row> ReadCsv(const std::string &path, const Row &expected_header) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::vector<Row> rows;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    boost::tokenizer<boost::escaped_list_separator<char>> tok(line);
    Row row(tok.begin(), tok.end());
    if (!header_seen) {
      header_seen = true;
      if (row != expected_header) {
        std::string want;
        for (const auto &h : expected_header) want += (want.empty() ? "" : ",") + h;
        Fail(ErrorKind::kFormat, path + ": expected header '" + want + "'");
      }
      continue;
    }
    if (row.size() != expected_header.size())
      Fail(ErrorKind::kFormat, path + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(expected_header.size()) + " fields");
    rows.push_back(std::move(row));
  }
  if (!header_seen) Fail(ErrorKind::kFormat, path + ": empty file");
  return rows;
}

std::string Quote(const std::string &field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '\\';
    out += c;
  }
  return out + "\"";
}

double ParseDouble(const std::string &s, const std::string &where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    Fail(ErrorKind::kFormat, where + ": not a number '" + s + "'");
  }
}

int ParseInt(const std::string &s, const std::string &where) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    Fail(ErrorKind::kFormat, where + ": not an integer '" + s + "'");
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream OpenForWrite(const std::string &path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  return out;
}

const Row kManifestHeader = {"clip_id",   "file_path", "speaker_id", "sentence_id",
                             "condition", "snr_db",    "split"};

}  // namespace

const char *SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(const std::string &name) {
  if (name == "train" || name.empty()) return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  Fail(ErrorKind::kInvalidArgument, "unknown split '" + name + "'");
}

Manifest ReadManifestCsv(const std::string &path) {
  Manifest m;
  for (const auto &row : ReadCsv(path, kManifestHeader)) {
    ManifestEntry e;
    e.clip_id = row[0];
    e.file_path = row[1];
    e.speaker_id = row[2];
    e.sentence_id = row[3];
    e.condition = ParseCondition(row[4]);
    if (!row[5].empty()) e.snr_db = ParseDouble(row[5], path);
    e.split = ParseSplit(row[6]);
    m.entries.push_back(std::move(e));
  }
  m.Validate();
  return m;
}

void WriteManifestCsv(const std::string &path, const Manifest &manifest) {
  auto out = OpenForWrite(path);
  out << "clip_id,file_path,speaker_id,sentence_id,condition,snr_db,split\n";
  for (const auto &e : manifest.entries) {
    out << Quote(e.clip_id) << ',' << Quote(e.file_path) << ',' << Quote(e.speaker_id) << ','
        << Quote(e.sentence_id) << ',' << ConditionName(e.condition) << ','
        << (e.snr_db ? FormatDouble(*e.snr_db) : "") << ',' << SplitName(e.split) << '\n';
  }
}

std::vector<RatingRecord> ReadRatingsCsv(const std::string &path) {
  std::vector<RatingRecord> records;
  std::map<std::string, std::size_t> index;
  for (const auto &row : ReadCsv(path, {"clip_id", "rating"})) {
    auto [it, inserted] = index.emplace(row[0], records.size());
    if (inserted) records.push_back(RatingRecord{row[0], {}});
    const int v = ParseInt(row[1], path);
    if (v < 1 || v > 5)
      Fail(ErrorKind::kFormat, path + ": rating " + row[1] + " outside 1..5");
    records[it->second].ratings.push_back(v);
  }
  return records;
}

void WriteRatingsCsv(const std::string &path, const std::vector<RatingRecord> &records) {
  auto out = OpenForWrite(path);
  out << "clip_id,rating\n";
  for (const auto &r : records)
    for (int v : r.ratings) out << Quote(r.clip_id) << ',' << v << '\n';
}

std::vector<MosLabel> ReadLabelsCsv(const std::string &path) {
  std::vector<MosLabel> labels;
  for (const auto &row : ReadCsv(path, {"clip_id", "mos", "ci95", "n_ratings"})) {
    MosLabel l;
    l.clip_id = row[0];
    l.mos = ParseDouble(row[1], path);
    l.ci95 = ParseDouble(row[2], path);
    l.n_ratings = ParseInt(row[3], path);
    labels.push_back(std::move(l));
  }
  return labels;
}

void WriteLabelsCsv(const std::string &path, const std::vector<MosLabel> &labels) {
  auto out = OpenForWrite(path);
  out << "clip_id,mos,ci95,n_ratings\n";
  for (const auto &l : labels)
    out << Quote(l.clip_id) << ',' << FormatDouble(l.mos) << ',' << FormatDouble(l.ci95) << ','
        << l.n_ratings << '\n';
}

}  // namespace sqm
