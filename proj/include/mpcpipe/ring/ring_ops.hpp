#pragma once

#include <cstdint>

namespace mpcpipe {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u32 = std::uint32_t;
using u8 = std::uint8_t;

// All arithmetic lives in Z_2^64: wrap, never trap or saturate.
inline constexpr u64 radd(u64 a, u64 b) { return a + b; }
inline constexpr u64 rsub(u64 a, u64 b) { return a - b; }
inline constexpr u64 rmul(u64 a, u64 b) { return a * b; }
inline constexpr u64 rneg(u64 a) { return ~a + 1; }

// Signed two's-complement view: values >= 2^63 denote negatives.
inline constexpr i64 to_signed(u64 v) { return static_cast<i64>(v); }
inline constexpr u64 from_signed(i64 v) { return static_cast<u64>(v); }

// Arithmetic shift right under the signed view.
inline constexpr u64 sar(u64 v, int k) {
  return from_signed(to_signed(v) >> k);
}

inline constexpr u64 msb_bit(u64 v) { return v >> 63; }

namespace meter {

// Thread-local tally of local compute, drained by the simulated transport
// to advance a party's clock deterministically. Units are element-ops;
// dispatches count tensor-op launches.
struct Work {
  u64 units = 0;
  u64 dispatches = 0;
};

inline Work& tls() {
  thread_local Work w;
  return w;
}

inline void charge(u64 units) {
  auto& w = tls();
  w.units += units;
  w.dispatches += 1;
}

inline Work drain() {
  auto& w = tls();
  Work out = w;
  w = Work{};
  return out;
}

}  // namespace meter

}  // namespace mpcpipe
