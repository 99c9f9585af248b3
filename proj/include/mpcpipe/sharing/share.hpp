#pragma once

#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"

namespace mpcpipe {

// One party's fragment of a secret tensor. Additive: the wrapping sum over
// parties reconstructs the secret. Binary: XOR over parties reconstructs.
struct AdditiveShare {
  int party = 0;
  RingTensor tensor;
};

struct BinaryShare {
  int party = 0;
  RingTensor tensor;
};

template <class Rng>
std::vector<AdditiveShare> share_additive(const RingTensor& x, int n, Rng& rng) {
  if (n < 2) throw ConfigError("share_additive: need at least 2 parties");
  std::vector<AdditiveShare> out(static_cast<std::size_t>(n));
  RingTensor acc(x.shape(), x.scale_bits());
  for (int p = 1; p < n; ++p) {
    RingTensor r(x.shape(), x.scale_bits());
    for (std::size_t i = 0; i < r.numel(); ++i) r.at(i) = rng();
    acc = add(acc, r);
    out[p] = AdditiveShare{p, std::move(r)};
  }
  out[0] = AdditiveShare{0, sub(x, acc)};
  return out;
}

template <class Rng>
std::vector<BinaryShare> share_binary(const RingTensor& x, int n, Rng& rng) {
  if (n < 2) throw ConfigError("share_binary: need at least 2 parties");
  std::vector<BinaryShare> out(static_cast<std::size_t>(n));
  RingTensor acc(x.shape(), x.scale_bits());
  for (int p = 1; p < n; ++p) {
    RingTensor r(x.shape(), x.scale_bits());
    for (std::size_t i = 0; i < r.numel(); ++i) r.at(i) = rng();
    acc = bit_xor(acc, r);
    out[p] = BinaryShare{p, std::move(r)};
  }
  out[0] = BinaryShare{0, bit_xor(x, acc)};
  return out;
}

inline RingTensor reconstruct(const std::vector<AdditiveShare>& shares) {
  if (shares.empty()) throw ProtocolError("reconstruct: no shares");
  RingTensor acc = shares[0].tensor;
  for (std::size_t i = 1; i < shares.size(); ++i) {
    if (!acc.same_shape(shares[i].tensor)) throw ProtocolError("reconstruct: shape mismatch");
    acc = add(acc, shares[i].tensor);
  }
  return acc;
}

inline RingTensor reconstruct(const std::vector<BinaryShare>& shares) {
  if (shares.empty()) throw ProtocolError("reconstruct: no shares");
  RingTensor acc = shares[0].tensor;
  for (std::size_t i = 1; i < shares.size(); ++i) {
    if (!acc.same_shape(shares[i].tensor)) throw ProtocolError("reconstruct: shape mismatch");
    acc = bit_xor(acc, shares[i].tensor);
  }
  return acc;
}

}  // namespace mpcpipe
