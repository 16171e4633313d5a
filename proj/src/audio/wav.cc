// src/audio/wav.cc

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
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sqm/audio.h"
#include "sqm/error.h"

namespace sqm {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(const std::uint8_t *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const std::uint8_t *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<std::uint8_t> *out, std::uint16_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xFF));
  out->push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutU32(std::vector<std::uint8_t> *out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out->push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void PutTag(std::vector<std::uint8_t> *out, const char *tag) {
  out->insert(out->end(), tag, tag + 4);
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

const char *ConditionName(Condition c) {
  switch (c) {
    case Condition::kClean: return "clean";
    case Condition::kNoisy: return "noisy";
    case Condition::kRealCall: return "real_call";
  }
  return "clean";
}

Condition ParseCondition(const std::string &name) {
  if (name == "clean") return Condition::kClean;
  if (name == "noisy") return Condition::kNoisy;
  if (name == "real_call") return Condition::kRealCall;
  Fail(ErrorKind::kInvalidArgument, "unknown condition '" + name + "'");
}

AudioClip DecodeWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    Fail(ErrorKind::kFormat, "not a RIFF/WAVE stream");

  std::optional<FmtChunk> fmt;
  const std::uint8_t *data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t *hdr = bytes.data() + pos;
    std::uint32_t chunk_size = ReadU32(hdr + 4);
    std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body)
      Fail(ErrorKind::kFormat, "truncated '" +
                                   std::string(reinterpret_cast<const char *>(hdr), 4) +
                                   "' chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) Fail(ErrorKind::kFormat, "fmt chunk too small");
      const std::uint8_t *f = bytes.data() + body;
      FmtChunk c;
      c.format = ReadU16(f);
      c.channels = ReadU16(f + 2);
      c.sample_rate = ReadU32(f + 4);
      c.block_align = ReadU16(f + 12);
      c.bits = ReadU16(f + 14);
      if (c.format == kFormatExtensible) {
        if (chunk_size < 40) Fail(ErrorKind::kFormat, "short extensible fmt chunk");
        c.format = ReadU16(f + 24);  // first two bytes of the subformat GUID
      }
      fmt = c;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
      have_data = true;
      break;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!fmt) Fail(ErrorKind::kFormat, "missing fmt chunk");
  if (!have_data) Fail(ErrorKind::kFormat, "missing data chunk");
  if (fmt->format != kFormatPcm || fmt->bits != 16)
    Fail(ErrorKind::kUnsupportedFormat,
         "only 16-bit integer PCM is supported (format " +
             std::to_string(fmt->format) + ", " + std::to_string(fmt->bits) +
             " bits)");
  if (fmt->channels != 1 && fmt->channels != 2)
    Fail(ErrorKind::kUnsupportedFormat,
         std::to_string(fmt->channels) + " channels not supported");
  if (fmt->sample_rate == 0) Fail(ErrorKind::kFormat, "zero sample rate");
  const std::size_t frame_bytes = 2u * fmt->channels;
  if (fmt->block_align != frame_bytes)
    Fail(ErrorKind::kFormat, "inconsistent block alignment");
  if (data_size == 0) Fail(ErrorKind::kEmptyAudio, "data chunk is empty");
  if (data_size % frame_bytes != 0)
    Fail(ErrorKind::kFormat, "data chunk is not a whole number of frames");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  const std::size_t n = data_size / frame_bytes;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t *p = data + i * frame_bytes;
    auto s0 = static_cast<std::int16_t>(ReadU16(p));
    if (fmt->channels == 1) {
      clip.samples[i] = static_cast<float>(s0) / 32768.0f;
    } else {
      auto s1 = static_cast<std::int16_t>(ReadU16(p + 2));
      clip.samples[i] = (static_cast<float>(s0) + static_cast<float>(s1)) / 65536.0f;
    }
  }
  return clip;
}

std::vector<std::uint8_t> EncodeWav(const AudioClip &clip) {
  if (clip.sample_rate_hz <= 0)
    Fail(ErrorKind::kInvalidArgument, "sample rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(&out, "RIFF");
  PutU32(&out, 36 + data_bytes);
  PutTag(&out, "WAVE");
  PutTag(&out, "fmt ");
  PutU32(&out, 16);
  PutU16(&out, kFormatPcm);
  PutU16(&out, 1);
  PutU32(&out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  PutU32(&out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  PutTag(&out, "data");
  PutU32(&out, data_bytes);
  for (float x : clip.samples) {
    double q = std::nearbyint(static_cast<double>(x) * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    PutU16(&out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

AudioClip ReadWavFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const Error &e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void WriteWavFile(const std::string &path, const AudioClip &clip) {
  auto bytes = EncodeWav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "short write to " + path);
}

}  // namespace sqm
