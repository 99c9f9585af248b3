#pragma once

#include "mpcpipe/ring/ring_ops.hpp"

namespace mpcpipe {

// Counter-mode PRG over a 64-bit key: block i is a strong mix of key + i*phi
// (splitmix64 finalizer). Seekable, reproducible, uniform over Z_2^64.
// Not cryptographic; this artifact's dealer is a lab stand-in.
class CounterRng {
 public:
  explicit CounterRng(u64 key, u64 stream = 0)
      : key_(key ^ (stream * 0x9E3779B97F4A7C15ull)), counter_(0) {}

  u64 operator()() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

  void seek(u64 counter) { counter_ = counter; }
  u64 counter() const { return counter_; }

  static u64 mix(u64 z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  u64 key_;
  u64 counter_;
};

}  // namespace mpcpipe
