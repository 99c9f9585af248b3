#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"

namespace mpcpipe {

inline constexpr int kDefaultScaleBits = 16;

// round(x * 2^scale) with ties toward +inf, so decode(encode(x)) - x lands in
// (-2^-(scale+1), 2^-(scale+1)].
inline u64 encode_fixed(double x, int scale_bits = kDefaultScaleBits) {
  long double t = std::floor(static_cast<long double>(x) * std::exp2l(scale_bits) + 0.5L);
  if (t < -9223372036854775808.0L || t >= 9223372036854775808.0L)
    throw RangeError("encode_fixed: " + std::to_string(x) + " exceeds representable range at scale " +
                     std::to_string(scale_bits));
  return from_signed(static_cast<i64>(t));
}

inline double decode_fixed(u64 v, int scale_bits = kDefaultScaleBits) {
  return static_cast<double>(to_signed(v)) * std::exp2(-scale_bits);
}

inline RingTensor encode_tensor(const std::vector<double>& vals, Shape shape,
                                int scale_bits = kDefaultScaleBits) {
  RingTensor out(std::move(shape), scale_bits);
  if (vals.size() != out.numel()) throw ShapeError("encode_tensor: value count mismatch");
  for (std::size_t i = 0; i < vals.size(); ++i) out.at(i) = encode_fixed(vals[i], scale_bits);
  return out;
}

inline std::vector<double> decode_tensor(const RingTensor& t) {
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode_fixed(t.at(i), t.scale_bits());
  return out;
}

// Drops shift_bits fractional bits after a fixed-point product: arithmetic
// right shift under the signed view. A product of two scale-s tensors carries
// scale-2s data under scale-s metadata; truncate(s) brings the data back to
// the nominal scale, so the metadata is kept. Applied per share locally; the
// reconstruction may then be off by one low-order unit per extra party
// (see sharing tests).
inline RingTensor truncate(const RingTensor& x, int shift_bits) {
  RingTensor out = sar_tensor(x, shift_bits);
  out.set_scale_bits(x.scale_bits());
  return out;
}

}  // namespace mpcpipe
