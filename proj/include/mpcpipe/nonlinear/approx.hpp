#pragma once

// Iterative fixed-point approximations of exp and 1/x on additive shares.

#include <string>

#include "mpcpipe/protocols/beaver.hpp"
#include "mpcpipe/protocols/context.hpp"
#include "mpcpipe/protocols/trunc.hpp"

namespace mpcpipe {

// e^x ~ (1 + w + w^2/2)^(2^n) with w = x/2^n, by n repeated squarings.
// Each squaring reveals a single blinded tensor (half the traffic of a
// general multiply) and is followed by a rescale. The second-order base term
// shrinks the systematic error to ~e^x * |x|^3 / (6 * 4^n), so the rescale
// rounding noise (amplified 2x per remaining level) dominates; n = 7 keeps
// both comfortably below 2^-10 at 20 fractional bits. The iterate stays in
// (0, ~2], so intermediate products never approach the ring wrap threshold
// that a wider internal scale would risk. Intended for x <= ~0.5 (softmax
// runs on max-subtracted rows).
inline AdditiveShare exp_shares(const AdditiveShare& x, ProtoCtx& ctx,
                                const std::string& tag = "exp", int square_iters = 7) {
  const int f = ctx.frac_bits;
  const int ch = ctx.chunks_for(x.tensor.numel());

  AdditiveShare w = truncate_shares(x, square_iters, ctx.comm, ctx.rng);
  AdditiveShare w2 = beaver_square(w, ctx.triples, ctx.comm, tag + ".w2", ch);
  w2 = truncate_shares(w2, f + 1, ctx.comm, ctx.rng);  // w^2 / 2
  AdditiveShare y{x.party, add(w.tensor, w2.tensor)};
  y = add_public(y, u64(1) << f);

  for (int i = 0; i < square_iters; ++i) {
    y = beaver_square(y, ctx.triples, ctx.comm, tag + ".sq" + std::to_string(i), ch);
    y = truncate_shares(y, f, ctx.comm, ctx.rng);
  }
  y.tensor.set_scale_bits(x.tensor.scale_bits());
  return y;
}

// Newton iteration for 1/x with the classic warm start 3e^(0.5-x) + 0.003,
// good on roughly x in (0, 2^12). Each step: y <- y * (2 - x*y).
inline AdditiveShare reciprocal_shares(const AdditiveShare& x, ProtoCtx& ctx,
                                       const std::string& tag = "recip",
                                       int newton_iters = 10) {
  const int f = ctx.frac_bits;
  const int ch = ctx.chunks_for(x.tensor.numel());

  AdditiveShare t = add_public(negate_share(x), ctx.encode(0.5));
  AdditiveShare y = exp_shares(t, ctx, tag + ".seed");
  y = add_public(scale_public(y, 3), ctx.encode(0.003));

  for (int i = 0; i < newton_iters; ++i) {
    AdditiveShare xy =
        beaver_mul(x, y, ctx.triples, ctx.comm, tag + ".xy" + std::to_string(i), ch);
    xy = truncate_shares(xy, f, ctx.comm, ctx.rng);
    AdditiveShare u = add_public(negate_share(xy), u64(2) << f);
    y = beaver_mul(y, u, ctx.triples, ctx.comm, tag + ".yu" + std::to_string(i), ch);
    y = truncate_shares(y, f, ctx.comm, ctx.rng);
  }
  return y;
}

}  // namespace mpcpipe
