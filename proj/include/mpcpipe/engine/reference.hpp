#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpcpipe/engine/model.hpp"

namespace mpcpipe {

// Plaintext double-precision executor. Mirrors the secure executor's data
// layouts exactly (same im2col gather order, same head packing, same 1/sqrt(dh)
// score scaling) but computes with real arithmetic, so differences against the
// MPC output measure only fixed-point and approximation error.
namespace refdetail {

inline DoubleTensor dense(const DoubleTensor& x, const DoubleTensor& W, const DoubleTensor* b) {
  const std::size_t in = W.shape[0], out = W.shape[1];
  const std::size_t rows = x.v.size() / in;
  DoubleTensor y;
  y.shape = x.shape;
  y.shape.back() = out;
  y.v.assign(rows * out, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = x.v[r * in + i];
      for (std::size_t o = 0; o < out; ++o) y.v[r * out + o] += xv * W.v[i * out + o];
    }
  if (b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < out; ++o) y.v[r * out + o] += b->v[o];
  return y;
}

// Column gather for conv: row = (n, oh, ow), col = (ci, ki, kj). Out-of-range
// taps read zero.
inline DoubleTensor im2col(const DoubleTensor& x, std::size_t k, std::size_t stride,
                           std::size_t pad) {
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const std::size_t OH = (H + 2 * pad - k) / stride + 1;
  const std::size_t OW = (W + 2 * pad - k) / stride + 1;
  DoubleTensor cols;
  cols.shape = {N * OH * OW, C * k * k};
  cols.v.assign(shape_numel(cols.shape), 0.0);
  std::size_t r = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow, ++r) {
        std::size_t c = 0;
        for (std::size_t ci = 0; ci < C; ++ci)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj, ++c) {
              const std::size_t ih = oh * stride + ki;  // padded coords
              const std::size_t iw = ow * stride + kj;
              if (ih < pad || iw < pad) continue;
              const std::size_t sh = ih - pad, sw = iw - pad;
              if (sh >= H || sw >= W) continue;
              cols.v[r * C * k * k + c] = x.v[((n * C + ci) * H + sh) * W + sw];
            }
      }
  return cols;
}

// [N*OH*OW, Cout] row-major rows back to NCHW.
inline DoubleTensor col2im(const DoubleTensor& y, std::size_t N, std::size_t Cout, std::size_t OH,
                           std::size_t OW) {
  DoubleTensor out;
  out.shape = {N, Cout, OH, OW};
  out.v.resize(shape_numel(out.shape));
  std::size_t r = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow, ++r)
        for (std::size_t co = 0; co < Cout; ++co)
          out.v[((n * Cout + co) * OH + oh) * OW + ow] = y.v[r * Cout + co];
  return out;
}

inline void softmax_rows(std::vector<double>& v, std::size_t cols) {
  for (std::size_t r = 0; r * cols < v.size(); ++r) {
    double* row = v.data() + r * cols;
    const double m = *std::max_element(row, row + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += (row[c] = std::exp(row[c] - m));
    for (std::size_t c = 0; c < cols; ++c) row[c] /= s;
  }
}

inline DoubleTensor attention(const DoubleTensor& x, std::size_t heads, const WeightMap& w,
                              const std::string& name, bool bias) {
  const std::size_t B = x.shape[0], T = x.shape[1], d = x.shape[2];
  const std::size_t dh = d / heads;
  const DoubleTensor& Wqkv = w.at(name + ".Wqkv");
  const DoubleTensor& Wo = w.at(name + ".Wo");
  const DoubleTensor* bqkv = bias ? &w.at(name + ".bqkv") : nullptr;
  const DoubleTensor* bo = bias ? &w.at(name + ".bo") : nullptr;
  const DoubleTensor qkv = dense(x, Wqkv, bqkv);  // [B, T, 3d]
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  DoubleTensor merged;
  merged.shape = {B, T, d};
  merged.v.assign(B * T * d, 0.0);
  std::vector<double> scores(T * T);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h) {
      const auto at = [&](std::size_t t, std::size_t part, std::size_t j) {
        return qkv.v[(b * T + t) * 3 * d + part * d + h * dh + j];
      };
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t u = 0; u < T; ++u) {
          double s = 0.0;
          for (std::size_t j = 0; j < dh; ++j) s += at(t, 0, j) * at(u, 1, j);
          scores[t * T + u] = s * inv_sqrt_dh;
        }
      softmax_rows(scores, T);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < dh; ++j) {
          double s = 0.0;
          for (std::size_t u = 0; u < T; ++u) s += scores[t * T + u] * at(u, 2, j);
          merged.v[(b * T + t) * d + h * dh + j] = s;
        }
    }
  return dense(merged, Wo, bo);
}

}  // namespace refdetail

inline DoubleTensor reference_forward(const ModelGraph& g, const WeightMap& w,
                                      const DoubleTensor& input) {
  check_weights(g, w);
  if (input.shape != g.input) throw ConfigError("reference_forward: input shape mismatch");
  DoubleTensor cur = input;
  for (const LayerSpec& l : g.layers) {
    switch (l.kind) {
      case LayerKind::Dense:
        cur = refdetail::dense(cur, w.at(l.name + ".W"), l.bias ? &w.at(l.name + ".b") : nullptr);
        break;
      case LayerKind::Conv2d: {
        const std::size_t N = cur.shape[0], H = cur.shape[2], W2 = cur.shape[3];
        const std::size_t OH = (H + 2 * l.pad - l.kernel) / l.stride + 1;
        const std::size_t OW = (W2 + 2 * l.pad - l.kernel) / l.stride + 1;
        DoubleTensor cols = refdetail::im2col(cur, l.kernel, l.stride, l.pad);
        DoubleTensor y = refdetail::dense(cols, w.at(l.name + ".W"),
                                          l.bias ? &w.at(l.name + ".b") : nullptr);
        cur = refdetail::col2im(y, N, l.out, OH, OW);
        break;
      }
      case LayerKind::Relu:
        for (double& v : cur.v) v = std::max(0.0, v);
        break;
      case LayerKind::Maxpool2d: {
        const std::size_t N = cur.shape[0], C = cur.shape[1], H = cur.shape[2], W2 = cur.shape[3];
        const std::size_t OH = (H - l.kernel) / l.stride + 1;
        const std::size_t OW = (W2 - l.kernel) / l.stride + 1;
        DoubleTensor out;
        out.shape = {N, C, OH, OW};
        out.v.resize(shape_numel(out.shape));
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t oh = 0; oh < OH; ++oh)
              for (std::size_t ow = 0; ow < OW; ++ow) {
                double m = -1e300;
                for (std::size_t ki = 0; ki < l.kernel; ++ki)
                  for (std::size_t kj = 0; kj < l.kernel; ++kj)
                    m = std::max(m, cur.v[((n * C + c) * H + oh * l.stride + ki) * W2 +
                                          ow * l.stride + kj]);
                out.v[((n * C + c) * OH + oh) * OW + ow] = m;
              }
        cur = std::move(out);
        break;
      }
      case LayerKind::Flatten: {
        std::size_t rest = 1;
        for (std::size_t i = 1; i < cur.shape.size(); ++i) rest *= cur.shape[i];
        cur.shape = {cur.shape[0], rest};
        break;
      }
      case LayerKind::Attention:
        cur = refdetail::attention(cur, l.heads, w, l.name, l.bias);
        break;
      case LayerKind::Softmax:
        refdetail::softmax_rows(cur.v, cur.shape.back());
        break;
      case LayerKind::MeanPool: {
        const std::size_t B = cur.shape[0], T = cur.shape[1], d = cur.shape[2];
        DoubleTensor out;
        out.shape = {B, d};
        out.v.assign(B * d, 0.0);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < d; ++j) out.v[b * d + j] += cur.v[(b * T + t) * d + j];
        const double inv = 1.0 / static_cast<double>(T);
        for (double& v : out.v) v *= inv;
        cur = std::move(out);
        break;
      }
    }
  }
  return cur;
}

}  // namespace mpcpipe
