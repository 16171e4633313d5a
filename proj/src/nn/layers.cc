// src/nn/layers.cc

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

#include "sqm/nn/layers.h"

#include <algorithm>
#include <cmath>

#include "sqm/error.h"

namespace sqm::nn {

namespace {

template <typename T>
using StridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using MutStridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;

template <typename T>
void Im2Col(const T *in, int c, int h, int w, const ConvSpec &s, int ho, int wo, T *cols) {
  const int k = s.kernel;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T *row = cols + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.padding + ky;
          T *dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T *src = in + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.padding + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
}

template <typename T>
void Col2Im(const T *cols, int c, int h, int w, const ConvSpec &s, int ho, int wo, T *out) {
  const int k = s.kernel;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T *row = cols + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.padding + ky;
          if (iy < 0 || iy >= h) continue;
          const T *src = row + static_cast<std::size_t>(oy) * wo;
          T *dst = out + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.padding + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
}

template <typename T>
T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

void CheckSize(std::size_t got, std::size_t want, const char *what) {
  if (got != want)
    Fail(ErrorKind::kShape, std::string(what) + ": expected " + std::to_string(want) +
                                " values, got " + std::to_string(got));
}

}  // namespace

std::string ShapeString(const std::vector<int> &shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

int ConvOutSize(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

template <typename T>
Activation<T> Conv2dForward(const Activation<T> &in, std::span<const T> weight,
                            std::span<const T> bias, const ConvSpec &spec) {
  const int ho = ConvOutSize(in.h, spec.kernel, spec.stride, spec.padding);
  const int wo = ConvOutSize(in.w, spec.kernel, spec.stride, spec.padding);
  if (ho < 1 || wo < 1)
    Fail(ErrorKind::kShape, "kernel " + std::to_string(spec.kernel) + " does not fit input " +
                                ShapeString({in.c, in.h, in.w}) + " with padding " +
                                std::to_string(spec.padding));
  const int k2c = in.c * spec.kernel * spec.kernel;
  CheckSize(weight.size(), static_cast<std::size_t>(spec.c_out) * k2c, "conv weight");
  CheckSize(bias.size(), static_cast<std::size_t>(spec.c_out), "conv bias");

  Activation<T> out(in.n, spec.c_out, ho, wo);
  const int hw = ho * wo;
  std::vector<T> cols(static_cast<std::size_t>(k2c) * hw);
  ConstMatMap<T> wmat(weight.data(), spec.c_out, k2c);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bias.data(), spec.c_out);
  ConstMatMap<T> cmat(cols.data(), k2c, hw);
  for (int i = 0; i < in.n; ++i) {
    Im2Col(in.item(i), in.c, in.h, in.w, spec, ho, wo, cols.data());
    MatMap<T> omat(out.item(i), spec.c_out, hw);
    omat.noalias() = wmat * cmat;
    omat.colwise() += bvec;
  }
  return out;
}

template <typename T>
void Conv2dBackward(const Activation<T> &in, const Activation<T> &dout,
                    std::span<const T> weight, const ConvSpec &spec, std::span<T> dweight,
                    std::span<T> dbias, Activation<T> *din) {
  const int k2c = in.c * spec.kernel * spec.kernel;
  const int hw = dout.h * dout.w;
  std::vector<T> cols(static_cast<std::size_t>(k2c) * hw);
  std::vector<T> dcols(din ? cols.size() : 0);
  ConstMatMap<T> wmat(weight.data(), spec.c_out, k2c);
  MatMap<T> dwmat(dweight.data(), spec.c_out, k2c);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dbvec(dbias.data(), spec.c_out);
  ConstMatMap<T> cmat(cols.data(), k2c, hw);
  if (din) *din = Activation<T>(in.n, in.c, in.h, in.w);
  for (int i = 0; i < in.n; ++i) {
    Im2Col(in.item(i), in.c, in.h, in.w, spec, dout.h, dout.w, cols.data());
    ConstMatMap<T> gmat(dout.item(i), spec.c_out, hw);
    dwmat.noalias() += gmat * cmat.transpose();
    dbvec += gmat.rowwise().sum();
    if (din) {
      MatMap<T> dcmat(dcols.data(), k2c, hw);
      dcmat.noalias() = wmat.transpose() * gmat;
      Col2Im(dcols.data(), in.c, in.h, in.w, spec, dout.h, dout.w, din->item(i));
    }
  }
}

template <typename T>
PoolResult<T> MaxPool2Forward(const Activation<T> &in) {
  if (in.h < 2 || in.w < 2)
    Fail(ErrorKind::kShape, "max pooling needs at least 2x2 input, got " +
                                ShapeString({in.h, in.w}));
  PoolResult<T> r;
  r.out = Activation<T>(in.n, in.c, in.h / 2, in.w / 2);
  r.argmax.resize(r.out.data.size());
  const int ho = in.h / 2, wo = in.w / 2;
  std::size_t o = 0;
  for (int i = 0; i < in.n; ++i)
    for (int ch = 0; ch < in.c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(i) * in.c + ch) * in.plane();
      for (int y = 0; y < ho; ++y)
        for (int x = 0; x < wo; ++x, ++o) {
          std::size_t best = base + static_cast<std::size_t>(2 * y) * in.w + 2 * x;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = base + static_cast<std::size_t>(2 * y + dy) * in.w + 2 * x + dx;
              if (in.data[idx] > in.data[best]) best = idx;
            }
          r.out.data[o] = in.data[best];
          r.argmax[o] = static_cast<std::int32_t>(best);
        }
    }
  return r;
}

template <typename T>
Activation<T> MaxPool2Backward(const Activation<T> &dout, std::span<const std::int32_t> argmax,
                               int in_h, int in_w) {
  Activation<T> din(dout.n, dout.c, in_h, in_w);
  for (std::size_t o = 0; o < dout.data.size(); ++o)
    din.data[static_cast<std::size_t>(argmax[o])] += dout.data[o];
  return din;
}

template <typename T>
Activation<T> BatchNormTrain(const Activation<T> &in, std::span<const T> gamma,
                             std::span<const T> beta, std::span<T> running_mean,
                             std::span<T> running_var, BatchNormCache<T> *cache) {
  if (in.n < 2)
    Fail(ErrorKind::kDegenerateBatch, "train-mode batch normalization needs a batch of at least 2");
  Activation<T> out(in.n, in.c, in.h, in.w);
  cache->xhat.assign(in.data.size(), T(0));
  cache->inv_std.assign(static_cast<std::size_t>(in.c), T(0));
  const std::size_t plane = in.plane();
  const double count = static_cast<double>(in.n) * static_cast<double>(plane);
  for (int ch = 0; ch < in.c; ++ch) {
    double sum = 0.0;
    for (int i = 0; i < in.n; ++i) {
      const T *p = in.item(i) + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (int i = 0; i < in.n; ++i) {
      const T *p = in.item(i) + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) ss += (p[j] - mean) * (p[j] - mean);
    }
    const double var = ss / count;
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
    cache->inv_std[static_cast<std::size_t>(ch)] = static_cast<T>(inv_std);
    const T g = gamma[static_cast<std::size_t>(ch)], b = beta[static_cast<std::size_t>(ch)];
    for (int i = 0; i < in.n; ++i) {
      const std::size_t off = i * in.per_item() + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const T xh = static_cast<T>((in.data[off + j] - mean) * inv_std);
        cache->xhat[off + j] = xh;
        out.data[off + j] = g * xh + b;
      }
    }
    auto &rm = running_mean[static_cast<std::size_t>(ch)];
    auto &rv = running_var[static_cast<std::size_t>(ch)];
    rm = static_cast<T>((1.0 - kBatchNormMomentum) * rm + kBatchNormMomentum * mean);
    rv = static_cast<T>((1.0 - kBatchNormMomentum) * rv +
                        kBatchNormMomentum * ss / (count - 1.0));
  }
  return out;
}

template <typename T>
Activation<T> BatchNormEval(const Activation<T> &in, std::span<const T> gamma,
                            std::span<const T> beta, std::span<const T> running_mean,
                            std::span<const T> running_var, BatchNormCache<T> *cache) {
  Activation<T> out(in.n, in.c, in.h, in.w);
  if (cache) {
    cache->xhat.assign(in.data.size(), T(0));
    cache->inv_std.assign(static_cast<std::size_t>(in.c), T(0));
  }
  const std::size_t plane = in.plane();
  for (int ch = 0; ch < in.c; ++ch) {
    const auto c = static_cast<std::size_t>(ch);
    const T inv_std = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + kBatchNormEps));
    const T mean = running_mean[c];
    if (cache) cache->inv_std[c] = inv_std;
    for (int i = 0; i < in.n; ++i) {
      const std::size_t off = i * in.per_item() + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const T xh = (in.data[off + j] - mean) * inv_std;
        if (cache) cache->xhat[off + j] = xh;
        out.data[off + j] = gamma[c] * xh + beta[c];
      }
    }
  }
  return out;
}

template <typename T>
Activation<T> BatchNormBackward(const Activation<T> &dout, std::span<const T> gamma,
                                const BatchNormCache<T> &cache, Mode mode, std::span<T> dgamma,
                                std::span<T> dbeta) {
  Activation<T> din(dout.n, dout.c, dout.h, dout.w);
  const std::size_t plane = dout.plane();
  const double count = static_cast<double>(dout.n) * static_cast<double>(plane);
  for (int ch = 0; ch < dout.c; ++ch) {
    const auto c = static_cast<std::size_t>(ch);
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < dout.n; ++i) {
      const std::size_t off = i * dout.per_item() + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        sum_dy += dout.data[off + j];
        sum_dy_xhat += static_cast<double>(dout.data[off + j]) * cache.xhat[off + j];
      }
    }
    dgamma[c] += static_cast<T>(sum_dy_xhat);
    dbeta[c] += static_cast<T>(sum_dy);
    const double g = gamma[c], inv_std = cache.inv_std[c];
    for (int i = 0; i < dout.n; ++i) {
      const std::size_t off = i * dout.per_item() + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const double dy = dout.data[off + j];
        if (mode == Mode::kEval) {
          din.data[off + j] = static_cast<T>(dy * g * inv_std);
        } else {
          // d/dx of gamma * (x - mean) / std with batch statistics.
          din.data[off + j] = static_cast<T>(
              g * inv_std * (dy - sum_dy / count - cache.xhat[off + j] * sum_dy_xhat / count));
        }
      }
    }
  }
  return din;
}

template <typename T>
void ReluInPlace(std::vector<T> *x) {
  for (auto &v : *x) v = v > T(0) ? v : T(0);
}

template <typename T>
void ReluBackwardInPlace(const std::vector<T> &out, std::vector<T> *grad) {
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] > T(0))) (*grad)[i] = T(0);
}

template <typename T>
std::vector<T> DropoutMask(std::size_t n, double rate, std::mt19937_64 *rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    Fail(ErrorKind::kInvalidArgument, "dropout rate must lie in [0, 1)");
  std::vector<T> mask(n, T(1));
  if (rate == 0.0) return mask;
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::bernoulli_distribution drop(rate);
  for (auto &m : mask) m = drop(*rng) ? T(0) : keep;
  return mask;
}

template <typename T>
std::vector<T> LstmForward(std::span<const T> inputs, int batch, int steps,
                           const LstmWeights<T> &w, bool reverse, LstmCache<T> *cache) {
  const int I = w.input, H = w.hidden, G = 4 * w.hidden;
  if (steps < 1) Fail(ErrorKind::kShape, "LSTM needs at least one time step");
  CheckSize(inputs.size(), static_cast<std::size_t>(batch) * steps * I, "LSTM input");
  CheckSize(w.W.size(), static_cast<std::size_t>(G) * I, "LSTM W");
  CheckSize(w.U.size(), static_cast<std::size_t>(G) * H, "LSTM U");
  CheckSize(w.b.size(), static_cast<std::size_t>(G), "LSTM bias");

  ConstMatMap<T> Wm(w.W.data(), G, I);
  ConstMatMap<T> Um(w.U.data(), G, H);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(w.b.data(), G);

  const std::size_t step_g = static_cast<std::size_t>(batch) * G;
  const std::size_t step_h = static_cast<std::size_t>(batch) * H;
  std::vector<T> gates(static_cast<std::size_t>(steps) * step_g);
  std::vector<T> cells(static_cast<std::size_t>(steps) * step_h);
  std::vector<T> tanh_cells(cells.size());
  std::vector<T> hidden(cells.size());
  std::vector<T> out(static_cast<std::size_t>(batch) * steps * H);
  RowMatrix<T> z(batch, G);
  const std::vector<T> zeros(step_h, T(0));

  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    StridedMap<T> xt(inputs.data() + static_cast<std::size_t>(t) * I, batch, I,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(steps) * I));
    const T *h_prev = s ? hidden.data() + (s - 1) * step_h : zeros.data();
    const T *c_prev = s ? cells.data() + (s - 1) * step_h : zeros.data();
    z.noalias() = xt * Wm.transpose();
    z.noalias() += ConstMatMap<T>(h_prev, batch, H) * Um.transpose();
    z.rowwise() += bv;

    T *ga = gates.data() + s * step_g;
    T *cs = cells.data() + s * step_h;
    T *tc = tanh_cells.data() + s * step_h;
    T *hs = hidden.data() + s * step_h;
    for (int b = 0; b < batch; ++b) {
      for (int j = 0; j < H; ++j) {
        const T i_g = Sigmoid(z(b, j));
        const T f_g = Sigmoid(z(b, H + j));
        const T g_g = std::tanh(z(b, 2 * H + j));
        const T o_g = Sigmoid(z(b, 3 * H + j));
        T *gb = ga + static_cast<std::size_t>(b) * G;
        gb[j] = i_g;
        gb[H + j] = f_g;
        gb[2 * H + j] = g_g;
        gb[3 * H + j] = o_g;
        const std::size_t k = static_cast<std::size_t>(b) * H + j;
        cs[k] = f_g * c_prev[k] + i_g * g_g;
        tc[k] = std::tanh(cs[k]);
        hs[k] = o_g * tc[k];
        out[(static_cast<std::size_t>(b) * steps + t) * H + j] = hs[k];
      }
    }
  }
  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
    cache->reverse = reverse;
    cache->inputs.assign(inputs.begin(), inputs.end());
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->tanh_cells = std::move(tanh_cells);
    cache->hidden = std::move(hidden);
  }
  return out;
}

template <typename T>
void LstmBackward(const LstmCache<T> &cache, std::span<const T> dh, const LstmWeights<T> &w,
                  std::span<T> dW, std::span<T> dU, std::span<T> db, std::span<T> dinputs) {
  const int B = cache.batch, S = cache.steps, I = w.input, H = w.hidden, G = 4 * H;
  ConstMatMap<T> Wm(w.W.data(), G, I);
  ConstMatMap<T> Um(w.U.data(), G, H);
  MatMap<T> dWm(dW.data(), G, I);
  MatMap<T> dUm(dU.data(), G, H);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbv(db.data(), G);
  if (!dinputs.empty()) std::fill(dinputs.begin(), dinputs.end(), T(0));

  const std::size_t step_g = static_cast<std::size_t>(B) * G;
  const std::size_t step_h = static_cast<std::size_t>(B) * H;
  const std::vector<T> zeros(step_h, T(0));
  RowMatrix<T> dz(B, G);
  RowMatrix<T> dh_next = RowMatrix<T>::Zero(B, H);
  RowMatrix<T> dc_next = RowMatrix<T>::Zero(B, H);

  for (int s = S - 1; s >= 0; --s) {
    const int t = cache.reverse ? S - 1 - s : s;
    const T *ga = cache.gates.data() + s * step_g;
    const T *tc = cache.tanh_cells.data() + s * step_h;
    const T *c_prev = s ? cache.cells.data() + (s - 1) * step_h : zeros.data();
    const T *h_prev = s ? cache.hidden.data() + (s - 1) * step_h : zeros.data();
    for (int b = 0; b < B; ++b) {
      const T *gb = ga + static_cast<std::size_t>(b) * G;
      for (int j = 0; j < H; ++j) {
        const std::size_t k = static_cast<std::size_t>(b) * H + j;
        const T i_g = gb[j], f_g = gb[H + j], g_g = gb[2 * H + j], o_g = gb[3 * H + j];
        const T dht = dh[(static_cast<std::size_t>(b) * S + t) * H + j] + dh_next(b, j);
        const T d_o = dht * tc[k];
        const T dc = dc_next(b, j) + dht * o_g * (T(1) - tc[k] * tc[k]);
        const T d_i = dc * g_g;
        const T d_g = dc * i_g;
        const T d_f = dc * c_prev[k];
        dc_next(b, j) = dc * f_g;
        dz(b, j) = d_i * i_g * (T(1) - i_g);
        dz(b, H + j) = d_f * f_g * (T(1) - f_g);
        dz(b, 2 * H + j) = d_g * (T(1) - g_g * g_g);
        dz(b, 3 * H + j) = d_o * o_g * (T(1) - o_g);
      }
    }
    StridedMap<T> xt(cache.inputs.data() + static_cast<std::size_t>(t) * I, B, I,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(S) * I));
    dWm.noalias() += dz.transpose() * xt;
    dUm.noalias() += dz.transpose() * ConstMatMap<T>(h_prev, B, H);
    dbv += dz.colwise().sum();
    if (!dinputs.empty()) {
      MutStridedMap<T> dxt(dinputs.data() + static_cast<std::size_t>(t) * I, B, I,
                           Eigen::OuterStride<>(static_cast<Eigen::Index>(S) * I));
      dxt.noalias() = dz * Wm;
    }
    dh_next.noalias() = dz * Um;
  }
}

#define SQM_INSTANTIATE_LAYERS(T)                                                          \
  template Activation<T> Conv2dForward<T>(const Activation<T> &, std::span<const T>,      \
                                          std::span<const T>, const ConvSpec &);          \
  template void Conv2dBackward<T>(const Activation<T> &, const Activation<T> &,           \
                                  std::span<const T>, const ConvSpec &, std::span<T>,      \
                                  std::span<T>, Activation<T> *);                          \
  template PoolResult<T> MaxPool2Forward<T>(const Activation<T> &);                       \
  template Activation<T> MaxPool2Backward<T>(const Activation<T> &,                       \
                                             std::span<const std::int32_t>, int, int);    \
  template Activation<T> BatchNormTrain<T>(const Activation<T> &, std::span<const T>,     \
                                           std::span<const T>, std::span<T>, std::span<T>, \
                                           BatchNormCache<T> *);                           \
  template Activation<T> BatchNormEval<T>(const Activation<T> &, std::span<const T>,      \
                                          std::span<const T>, std::span<const T>,          \
                                          std::span<const T>, BatchNormCache<T> *);        \
  template Activation<T> BatchNormBackward<T>(const Activation<T> &, std::span<const T>,  \
                                              const BatchNormCache<T> &, Mode,             \
                                              std::span<T>, std::span<T>);                 \
  template void ReluInPlace<T>(std::vector<T> *);                                          \
  template void ReluBackwardInPlace<T>(const std::vector<T> &, std::vector<T> *);          \
  template std::vector<T> DropoutMask<T>(std::size_t, double, std::mt19937_64 *);          \
  template std::vector<T> LstmForward<T>(std::span<const T>, int, int,                    \
                                         const LstmWeights<T> &, bool, LstmCache<T> *);    \
  template void LstmBackward<T>(const LstmCache<T> &, std::span<const T>,                 \
                                const LstmWeights<T> &, std::span<T>, std::span<T>,        \
                                std::span<T>, std::span<T>);

SQM_INSTANTIATE_LAYERS(float)
SQM_INSTANTIATE_LAYERS(double)

#undef SQM_INSTANTIATE_LAYERS

}  // namespace sqm::nn
