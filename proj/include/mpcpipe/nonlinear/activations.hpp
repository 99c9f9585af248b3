#pragma once

// Comparison-based activations on additive shares: relu, running max,
// stable softmax, max pooling.

#include <string>
#include <utility>

#include "mpcpipe/nonlinear/approx.hpp"
#include "mpcpipe/protocols/beaver.hpp"
#include "mpcpipe/protocols/compare.hpp"
#include "mpcpipe/protocols/context.hpp"
#include "mpcpipe/protocols/trunc.hpp"

namespace mpcpipe {

namespace detail {

// Contiguous copy of columns [lo, hi) when t is viewed as [outer, width].
inline RingTensor take_cols(const RingTensor& t, std::size_t width, std::size_t lo,
                            std::size_t hi) {
  if (width == 0 || t.numel() % width != 0 || hi > width || lo > hi)
    throw ShapeError("take_cols: bad column range");
  const std::size_t outer = t.numel() / width;
  const std::size_t w = hi - lo;
  RingTensor out(Shape{outer, w}, t.scale_bits());
  const auto src = t.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < w; ++j) dst[o * w + j] = src[o * width + lo + j];
  meter::charge(outer * w);
  return out;
}

}  // namespace detail

// x * [x > 0], computed as x - x * sign_bit(x). The gate bit is integer
// valued, so no rescale is needed.
inline AdditiveShare relu_shares(const AdditiveShare& x, ProtoCtx& ctx,
                                 const std::string& tag = "relu") {
  const int ch = ctx.chunks_for(x.tensor.numel());
  BinaryShare s =
      msb(x, ctx.triples, ctx.comm, ctx.rng, ctx.adder_for(x.tensor.numel()), tag + ".msb");
  AdditiveShare c = b2a_bit(s, ctx.triples, ctx.comm, tag + ".b2a", ch);
  AdditiveShare xc = beaver_mul(x, c, ctx.triples, ctx.comm, tag + ".gate", ch);
  return {x.party, sub(x.tensor, xc.tensor)};
}

// Tournament max over the last dim of a [outer, L] view; returns [outer, 1].
// Each round halves the field with max(a,b) = a + (b-a) * [a < b].
inline AdditiveShare max_last_dim(const AdditiveShare& x, std::size_t L, ProtoCtx& ctx,
                                  const std::string& tag = "max") {
  if (L == 0 || x.tensor.numel() % L != 0) throw ShapeError("max_last_dim: bad row length");
  const std::size_t outer = x.tensor.numel() / L;
  const int party = x.party;
  RingTensor cur = reshape(x.tensor, {outer, L});
  std::size_t len = L;
  int round = 0;
  while (len > 1) {
    const std::size_t h = len / 2;
    const bool odd = len & 1;
    RingTensor a = detail::take_cols(cur, len, 0, h);
    RingTensor b = detail::take_cols(cur, len, h, 2 * h);
    const std::string rt = tag + ".r" + std::to_string(round++);
    AdditiveShare gate = less_than(AdditiveShare{party, a}, AdditiveShare{party, b}, ctx.triples,
                                   ctx.comm, ctx.rng, ctx.adder_for(a.numel()), rt);
    AdditiveShare diff{party, sub(b, a)};
    AdditiveShare step =
        beaver_mul(diff, gate, ctx.triples, ctx.comm, rt + ".pick", ctx.chunks_for(a.numel()));
    RingTensor m = add(a, step.tensor);
    if (odd) {
      RingTensor next(Shape{outer, h + 1}, cur.scale_bits());
      auto nd = next.data();
      const auto md = m.data();
      const auto cd = cur.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < h; ++j) nd[o * (h + 1) + j] = md[o * h + j];
        nd[o * (h + 1) + h] = cd[o * len + len - 1];
      }
      meter::charge(next.numel());
      cur = std::move(next);
      len = h + 1;
    } else {
      cur = std::move(m);
      len = h;
    }
  }
  return {party, reshape(cur, {outer, 1})};
}

// Numerically stable softmax along the last dim: exp(x - rowmax) scaled by
// the Newton reciprocal of the row sum.
inline AdditiveShare softmax_shares(const AdditiveShare& x, std::size_t L, ProtoCtx& ctx,
                                    const std::string& tag = "softmax") {
  const std::size_t outer = x.tensor.numel() / L;
  const int party = x.party;
  const int ch = ctx.chunks_for(x.tensor.numel());

  AdditiveShare mx = max_last_dim(x, L, ctx, tag + ".max");
  RingTensor centered = sub(reshape(x.tensor, {outer, L}), broadcast_last(mx.tensor, L));
  AdditiveShare e = exp_shares(AdditiveShare{party, std::move(centered)}, ctx, tag + ".exp");

  RingTensor rowsum = sum_last_dim(e.tensor);  // [outer, 1]
  AdditiveShare r = reciprocal_shares(AdditiveShare{party, std::move(rowsum)}, ctx,
                                      tag + ".recip");
  AdditiveShare prod = beaver_mul(e, AdditiveShare{party, broadcast_last(r.tensor, L)},
                                  ctx.triples, ctx.comm, tag + ".scale", ch);
  prod = truncate_shares(prod, ctx.frac_bits, ctx.comm, ctx.rng);
  return {party, reshape(prod.tensor, x.tensor.shape())};
}

// 2D max pooling on an [N, C, H, W] tensor: gathers each window into a row
// and reuses the tournament max.
inline AdditiveShare maxpool2d_shares(const AdditiveShare& x, std::size_t N, std::size_t C,
                                      std::size_t H, std::size_t W, std::size_t k, std::size_t s,
                                      ProtoCtx& ctx, const std::string& tag = "maxpool") {
  if (H < k || W < k) throw ShapeError("maxpool2d: window larger than input");
  const std::size_t OH = (H - k) / s + 1;
  const std::size_t OW = (W - k) / s + 1;
  const std::size_t rows = N * C * OH * OW;
  RingTensor win(Shape{rows, k * k}, x.tensor.scale_bits());
  const auto src = x.tensor.data();
  auto dst = win.data();
  std::size_t r = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t oh = 0; oh < OH; ++oh)
        for (std::size_t ow = 0; ow < OW; ++ow, ++r) {
          std::size_t base = ((n * C + c) * H + oh * s) * W + ow * s;
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
              dst[r * k * k + i * k + j] = src[base + i * W + j];
        }
  meter::charge(win.numel());
  AdditiveShare mx = max_last_dim(AdditiveShare{x.party, std::move(win)}, k * k, ctx, tag);
  return {x.party, reshape(mx.tensor, {N, C, OH, OW})};
}

}  // namespace mpcpipe
