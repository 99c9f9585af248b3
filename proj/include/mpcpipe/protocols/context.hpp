#pragma once

// Bundled per-party state threaded through the composite protocols: triple
// source, communicator, mask rng, fixed-point scale, and pipelining knobs.

#include <cstddef>

#include "mpcpipe/protocols/adder.hpp"
#include "mpcpipe/ring/fixed.hpp"
#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/sharing/triple.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

struct ProtoCtx {
  TripleSource& triples;
  Communicator& comm;
  CounterRng& rng;  // party-local one-time masks (conversions, share folds)
  int frac_bits = kDefaultScaleBits;
  AdderOptions adder{};
  int chunks = 1;  // reveal chunking; 1 = blocking
  std::size_t chunk_threshold = 0;  // bytes; ops smaller than this stay unchunked

  int chunks_for(std::size_t numel) const {
    if (chunks <= 1) return 1;
    if (chunk_threshold != 0 && numel * sizeof(u64) < chunk_threshold) return 1;
    return chunks;
  }
  AdderOptions adder_for(std::size_t numel) const {
    AdderOptions o = adder;
    o.chunks = chunks_for(numel);
    return o;
  }
  u64 encode(double v) const { return encode_fixed(v, frac_bits); }
};

// Public-constant arithmetic on additive shares: party 0 absorbs offsets,
// scaling by a public integer is per-share.
inline AdditiveShare add_public(const AdditiveShare& x, u64 v) {
  return {x.party, x.party == 0 ? add_scalar(x.tensor, v) : x.tensor};
}

inline AdditiveShare scale_public(const AdditiveShare& x, u64 k) {
  return {x.party, mul_scalar(x.tensor, k)};
}

inline AdditiveShare negate_share(const AdditiveShare& x) { return {x.party, neg(x.tensor)}; }

}  // namespace mpcpipe
