#pragma once

// Share-domain conversions and sign extraction. Comparisons run in the
// binary domain: convert, add, read the top bit, lift the bit back.

#include <string>
#include <utility>
#include <vector>

#include "mpcpipe/protocols/adder.hpp"
#include "mpcpipe/protocols/beaver.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/sharing/triple.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

// Additive -> XOR sharing of the same ring value. Each party XOR-splits its
// own additive share vector (fresh masks from its rng, one piece per peer),
// then the n resulting binary sharings are summed with n-1 secure adders.
// Exact, since the adder works mod 2^64.
inline BinaryShare a2b(const AdditiveShare& x, TripleSource& triples, Communicator& comm,
                       CounterRng& rng, const AdderOptions& opt = {},
                       const std::string& tag = "a2b") {
  const int n = comm.n_parties();
  const int p = comm.party();
  const Shape& shape = x.tensor.shape();

  RingTensor keep = x.tensor;
  for (int q = 0; q < n; ++q) {
    if (q == p) continue;
    RingTensor r(shape, x.tensor.scale_bits());
    for (auto& w : r.data()) w = rng();
    keep = bit_xor(keep, r);
    comm.send_to(q, r);
  }

  std::vector<BinaryShare> parts;
  parts.reserve(std::size_t(n));
  for (int j = 0; j < n; ++j) {
    if (j == p)
      parts.push_back(BinaryShare{p, keep});
    else
      parts.push_back(BinaryShare{p, comm.recv_from(j, shape)});
  }

  BinaryShare acc = std::move(parts[0]);
  for (int j = 1; j < n; ++j)
    acc = binary_add(acc, parts[std::size_t(j)], triples, comm, opt,
                     tag + ".add" + std::to_string(j));
  return acc;
}

// XOR sharing of the sign bit of x, in bit position 0.
inline BinaryShare msb(const AdditiveShare& x, TripleSource& triples, Communicator& comm,
                       CounterRng& rng, const AdderOptions& opt = {},
                       const std::string& tag = "msb") {
  BinaryShare b = a2b(x, triples, comm, rng, opt, tag);
  return BinaryShare{b.party, shr(b.tensor, 63)};
}

// Lift an XOR-shared 0/1 vector into the additive domain. Party q's bit
// b_q already is a valid additive sharing (share b_q at q, zero elsewhere),
// so fold with acc <- acc + b_q - 2*acc*b_q; n-1 secure multiplies.
inline AdditiveShare b2a_bit(const BinaryShare& b, TripleSource& triples, Communicator& comm,
                             const std::string& tag = "b2a", int chunks = 1) {
  const int n = comm.n_parties();
  const int p = comm.party();
  const RingTensor zero(b.tensor.shape());
  // Only bit 0 of each share vector carries the bit; the rest is mask noise.
  const RingTensor mine = and_scalar(b.tensor, 1);

  AdditiveShare acc{p, p == 0 ? mine : zero};
  for (int q = 1; q < n; ++q) {
    AdditiveShare bq{p, p == q ? mine : zero};
    AdditiveShare prod =
        beaver_mul(acc, bq, triples, comm, tag + ".m" + std::to_string(q), chunks);
    acc.tensor = sub(add(acc.tensor, bq.tensor), add(prod.tensor, prod.tensor));
  }
  return acc;
}

// Additive sharing of [x < y] for signed fixed-point operands (valid while
// |x - y| < 2^63).
inline AdditiveShare less_than(const AdditiveShare& x, const AdditiveShare& y,
                               TripleSource& triples, Communicator& comm, CounterRng& rng,
                               const AdderOptions& opt = {}, const std::string& tag = "lt") {
  AdditiveShare d{x.party, sub(x.tensor, y.tensor)};
  BinaryShare m = msb(d, triples, comm, rng, opt, tag + ".msb");
  return b2a_bit(m, triples, comm, tag + ".b2a", opt.chunks);
}

}  // namespace mpcpipe
