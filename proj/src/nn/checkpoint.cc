// src/nn/checkpoint.cc

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

#include "sqm/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "sqm/error.h"

namespace sqm::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void Bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const std::uint8_t *>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void U8(std::uint8_t v) { Bytes(&v, 1); }
  void U16(std::uint16_t v) { Bytes(&v, 2); }
  void U32(std::uint32_t v) { Bytes(&v, 4); }
  void Tensor(const std::string &name, const std::vector<int> &shape, std::span<const float> data) {
    if (name.size() > 0xFFFF) Fail(ErrorKind::kInvalidArgument, "tensor name too long");
    U16(static_cast<std::uint16_t>(name.size()));
    Bytes(name.data(), name.size());
    U8(static_cast<std::uint8_t>(shape.size()));
    for (int d : shape) U32(static_cast<std::uint32_t>(d));
    Bytes(data.data(), data.size() * sizeof(float));
  }
  std::vector<std::uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  void Bytes(void *dst, std::size_t n) {
    if (n > bytes_.size() - pos_) Fail(ErrorKind::kFormat, "checkpoint stream is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t U8() { std::uint8_t v; Bytes(&v, 1); return v; }
  std::uint16_t U16() { std::uint16_t v; Bytes(&v, 2); return v; }
  std::uint32_t U32() { std::uint32_t v; Bytes(&v, 4); return v; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct RawTensor {
  std::vector<int> shape;
  std::vector<float> data;
};

void Expect(const std::map<std::string, RawTensor> &tensors, const std::string &name,
            const std::vector<int> &shape) {
  auto it = tensors.find(name);
  if (it == tensors.end())
    Fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint lacks tensor '" + name + "'");
  if (it->second.shape != shape)
    Fail(ErrorKind::kIncompatibleCheckpoint,
         "tensor '" + name + "' has shape " + ShapeString(it->second.shape) + ", expected " +
             ShapeString(shape));
}

}  // namespace

std::vector<std::uint8_t> SaveCheckpoint(const Model<float> &model,
                                         const OptimizerState<float> *opt) {
  std::uint32_t count = static_cast<std::uint32_t>(model.params().size());
  std::size_t n_trainable = 0;
  for (const auto &p : model.params()) n_trainable += p.trainable;
  if (opt) {
    if (opt->m.size() != n_trainable || opt->v.size() != n_trainable)
      Fail(ErrorKind::kShape, "optimizer state does not match model");
    count += 2 + 2 * static_cast<std::uint32_t>(n_trainable);
  }

  Writer w;
  w.Bytes("PSQM", 4);
  w.U32(kCheckpointVersion);
  w.U32(count);
  for (const auto &p : model.params()) w.Tensor(p.name, p.value.shape, p.value.data);
  if (opt) {
    const float hp[4] = {static_cast<float>(opt->cfg.lr), static_cast<float>(opt->cfg.beta1),
                         static_cast<float>(opt->cfg.beta2), static_cast<float>(opt->cfg.epsilon)};
    w.Tensor("adam.config", {4}, hp);
    const float step = static_cast<float>(opt->step);
    w.Tensor("adam.step", {1}, std::span<const float>(&step, 1));
    std::size_t k = 0;
    for (const auto &p : model.params()) {
      if (!p.trainable) continue;
      w.Tensor("adam.m." + p.name, p.value.shape, opt->m[k]);
      w.Tensor("adam.v." + p.name, p.value.shape, opt->v[k]);
      ++k;
    }
  }
  return w.Take();
}

LoadedCheckpoint LoadCheckpoint(std::span<const std::uint8_t> bytes, const ModelConfig &cfg) {
  Reader r(bytes);
  char magic[4];
  r.Bytes(magic, 4);
  if (std::memcmp(magic, "PSQM", 4) != 0) Fail(ErrorKind::kFormat, "bad checkpoint magic");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion)
    Fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.U32();

  std::map<std::string, RawTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.U16(), '\0');
    r.Bytes(name.data(), name.size());
    RawTensor t;
    const int ndim = r.U8();
    for (int d = 0; d < ndim; ++d) t.shape.push_back(static_cast<int>(r.U32()));
    t.data.resize(NumElements(t.shape));
    r.Bytes(t.data.data(), t.data.size() * sizeof(float));
    if (!tensors.emplace(std::move(name), std::move(t)).second)
      Fail(ErrorKind::kFormat, "duplicate tensor in checkpoint");
  }
  if (!r.done()) Fail(ErrorKind::kFormat, "trailing bytes after last tensor");

  LoadedCheckpoint out{Model<float>(cfg), std::nullopt};
  std::size_t consumed = 0;
  for (auto &p : out.model.params()) {
    Expect(tensors, p.name, p.value.shape);
    p.value.data = tensors[p.name].data;
    ++consumed;
  }
  if (tensors.count("adam.step")) {
    Expect(tensors, "adam.config", {4});
    Expect(tensors, "adam.step", {1});
    OptimizerState<float> opt;
    const auto &hp = tensors["adam.config"].data;
    opt.cfg = AdamConfig{hp[0], hp[1], hp[2], hp[3]};
    opt.step = static_cast<std::int64_t>(tensors["adam.step"].data[0]);
    consumed += 2;
    for (const auto &p : out.model.params()) {
      if (!p.trainable) continue;
      Expect(tensors, "adam.m." + p.name, p.value.shape);
      Expect(tensors, "adam.v." + p.name, p.value.shape);
      opt.m.push_back(tensors["adam.m." + p.name].data);
      opt.v.push_back(tensors["adam.v." + p.name].data);
      consumed += 2;
    }
    out.opt = std::move(opt);
  }
  if (consumed != tensors.size()) {
    for (const auto &[name, t] : tensors) {
      const bool known = out.model.Find(name) != nullptr || name.rfind("adam.", 0) == 0;
      if (!known)
        Fail(ErrorKind::kIncompatibleCheckpoint, "unexpected tensor '" + name + "'");
    }
    Fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint holds unexpected optimizer tensors");
  }
  return out;
}

void SaveCheckpointFile(const std::string &path, const Model<float> &model,
                        const OptimizerState<float> *opt) {
  const auto bytes = SaveCheckpoint(model, opt);
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "short write to " + path);
}

LoadedCheckpoint LoadCheckpointFile(const std::string &path, const ModelConfig &cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return LoadCheckpoint(bytes, cfg);
}

}  // namespace sqm::nn
