#pragma once

// Fixed-point rescaling on additive shares.

#include <utility>

#include "mpcpipe/ring/fixed.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

// Probabilistic truncation by a local arithmetic shift of each share vector.
//
// This is only sound when exactly two nonzero share vectors are in play: two
// signed shares of a small value miss their carry with probability
// ~|value|/2^64, and each party contributes at most 1 ulp of rounding error.
// With three or more uniform shares the carry term is no longer negligible
// (it fails at rate ~1/4 and shifts the result by a huge multiple of 2^-bits),
// so parties >= 2 first fold their share into parties 0 and 1 behind fresh
// one-time masks, then everyone shifts locally. The fold costs two
// point-to-point messages per extra party and reveals only uniform values.
inline AdditiveShare truncate_shares(const AdditiveShare& x, int bits, Communicator& comm,
                                     CounterRng& rng) {
  const int n = comm.n_parties();
  const int p = comm.party();
  RingTensor t = x.tensor;
  if (n > 2) {
    if (p >= 2) {
      RingTensor u(t.shape(), t.scale_bits());
      for (auto& w : u.data()) w = rng();
      comm.send_to(0, u);
      comm.send_to(1, sub(t, u));
      t = RingTensor(t.shape(), t.scale_bits());  // folded away; share is now zero
    } else {
      for (int q = 2; q < n; ++q) t = add(t, comm.recv_from(q, t.shape()));
    }
  }
  return AdditiveShare{p, truncate(t, bits)};
}

}  // namespace mpcpipe
