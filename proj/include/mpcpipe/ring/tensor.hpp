#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/ring_ops.hpp"

namespace mpcpipe {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// N-dimensional row-major tensor of Z_2^64 elements. Carries the fixed-point
// scale as metadata; ops that combine tensors require matching shapes (no
// broadcast except explicit scalar variants).
class RingTensor {
 public:
  RingTensor() = default;
  explicit RingTensor(Shape shape, int scale_bits = 0)
      : shape_(std::move(shape)),
        data_(shape_numel(shape_), 0),
        scale_bits_(scale_bits) {}
  RingTensor(Shape shape, std::vector<u64> data, int scale_bits = 0)
      : shape_(std::move(shape)), data_(std::move(data)), scale_bits_(scale_bits) {
    if (data_.size() != shape_numel(shape_))
      throw ShapeError("tensor data length does not match shape " + shape_str(shape_));
  }

  static RingTensor scalar(u64 v, int scale_bits = 0) {
    return RingTensor(Shape{}, std::vector<u64>{v}, scale_bits);
  }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  int scale_bits() const { return scale_bits_; }
  void set_scale_bits(int s) { scale_bits_ = s; }

  std::span<const u64> data() const { return data_; }
  std::span<u64> data() { return data_; }
  u64 at(std::size_t i) const { return data_[i]; }
  u64& at(std::size_t i) { return data_[i]; }

  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t ndim() const { return shape_.size(); }

  bool same_shape(const RingTensor& o) const { return shape_ == o.shape_; }

  friend bool operator==(const RingTensor& a, const RingTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<u64> data_;
  int scale_bits_ = 0;
};

namespace detail {

inline void require_same_shape(const RingTensor& a, const RingTensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

template <class F>
RingTensor zip(const RingTensor& a, const RingTensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  RingTensor out(a.shape(), a.scale_bits());
  const auto pa = a.data(), pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = f(pa[i], pb[i]);
  meter::charge(pa.size());
  return out;
}

template <class F>
RingTensor map(const RingTensor& a, F f) {
  RingTensor out(a.shape(), a.scale_bits());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = f(pa[i]);
  meter::charge(pa.size());
  return out;
}

}  // namespace detail

inline RingTensor add(const RingTensor& a, const RingTensor& b) {
  return detail::zip(a, b, "add", radd);
}
inline RingTensor sub(const RingTensor& a, const RingTensor& b) {
  return detail::zip(a, b, "sub", rsub);
}
inline RingTensor mul(const RingTensor& a, const RingTensor& b) {
  return detail::zip(a, b, "mul", rmul);
}
inline RingTensor bit_xor(const RingTensor& a, const RingTensor& b) {
  return detail::zip(a, b, "xor", [](u64 x, u64 y) { return x ^ y; });
}
inline RingTensor bit_and(const RingTensor& a, const RingTensor& b) {
  return detail::zip(a, b, "and", [](u64 x, u64 y) { return x & y; });
}
inline RingTensor neg(const RingTensor& a) {
  return detail::map(a, rneg);
}
inline RingTensor bit_not(const RingTensor& a) {
  return detail::map(a, [](u64 x) { return ~x; });
}

inline RingTensor add_scalar(const RingTensor& a, u64 s) {
  return detail::map(a, [s](u64 x) { return radd(x, s); });
}
inline RingTensor mul_scalar(const RingTensor& a, u64 s) {
  return detail::map(a, [s](u64 x) { return rmul(x, s); });
}
inline RingTensor and_scalar(const RingTensor& a, u64 s) {
  return detail::map(a, [s](u64 x) { return x & s; });
}
inline RingTensor xor_scalar(const RingTensor& a, u64 s) {
  return detail::map(a, [s](u64 x) { return x ^ s; });
}
inline RingTensor shl(const RingTensor& a, int k) {
  return detail::map(a, [k](u64 x) { return x << k; });
}
inline RingTensor shr(const RingTensor& a, int k) {
  return detail::map(a, [k](u64 x) { return x >> k; });
}
inline RingTensor sar_tensor(const RingTensor& a, int k) {
  return detail::map(a, [k](u64 x) { return sar(x, k); });
}

inline RingTensor reshape(const RingTensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: numel mismatch " + shape_str(a.shape()) + " -> " +
                     shape_str(shape));
  return RingTensor(std::move(shape), std::vector<u64>(a.data().begin(), a.data().end()),
                    a.scale_bits());
}

// Flat element range [lo, hi) as a 1-D tensor; used for inner-layer chunking.
inline RingTensor slice_elems(const RingTensor& a, std::size_t lo, std::size_t hi) {
  if (lo > hi || hi > a.numel()) throw ShapeError("slice_elems: range out of bounds");
  return RingTensor(Shape{hi - lo},
                    std::vector<u64>(a.data().begin() + lo, a.data().begin() + hi),
                    a.scale_bits());
}

inline void copy_into(RingTensor& dst, std::size_t offset, const RingTensor& src) {
  if (offset + src.numel() > dst.numel()) throw ShapeError("copy_into: overflow");
  auto pd = dst.data();
  const auto ps = src.data();
  for (std::size_t i = 0; i < ps.size(); ++i) pd[offset + i] = ps[i];
}

// [2, ...shape] stack of two same-shape tensors.
inline RingTensor stack_pair(const RingTensor& a, const RingTensor& b) {
  detail::require_same_shape(a, b, "stack_pair");
  Shape s;
  s.push_back(2);
  for (auto d : a.shape()) s.push_back(d);
  RingTensor out(std::move(s), a.scale_bits());
  copy_into(out, 0, a);
  copy_into(out, a.numel(), b);
  meter::charge(a.numel() * 2);
  return out;
}

inline std::pair<RingTensor, RingTensor> unstack_pair(const RingTensor& sp, Shape half_shape) {
  std::size_t h = sp.numel() / 2;
  RingTensor a = slice_elems(sp, 0, h);
  RingTensor b = slice_elems(sp, h, 2 * h);
  return {reshape(a, half_shape), reshape(b, std::move(half_shape))};
}

// Treats the tensor as [rows, row_width] with row_width = product of the last
// `tail_dims` dims, and copies rows [lo, hi).
inline RingTensor slice_rows(const RingTensor& a, std::size_t row_width, std::size_t lo,
                             std::size_t hi) {
  if (row_width == 0 || a.numel() % row_width != 0)
    throw ShapeError("slice_rows: width does not divide numel");
  return slice_elems(a, lo * row_width, hi * row_width);
}

// Sum along the last dim, keeping it as size 1.
inline RingTensor sum_last_dim(const RingTensor& a) {
  if (a.ndim() == 0) throw ShapeError("sum_last_dim: rank-0 tensor");
  std::size_t L = a.shape().back();
  std::size_t outer = a.numel() / L;
  Shape s = a.shape();
  s.back() = 1;
  RingTensor out(std::move(s), a.scale_bits());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    u64 acc = 0;
    for (std::size_t i = 0; i < L; ++i) acc = radd(acc, pa[o * L + i]);
    po[o] = acc;
  }
  meter::charge(a.numel());
  return out;
}

// Repeat a [..., 1] tensor L times along its last dim.
inline RingTensor broadcast_last(const RingTensor& a, std::size_t L) {
  if (a.ndim() == 0 || a.shape().back() != 1)
    throw ShapeError("broadcast_last: last dim must be 1");
  Shape s = a.shape();
  s.back() = L;
  RingTensor out(std::move(s), a.scale_bits());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t o = 0; o < pa.size(); ++o)
    for (std::size_t i = 0; i < L; ++i) po[o * L + i] = pa[o];
  meter::charge(out.numel());
  return out;
}

// Batched matrix product: a is [batch..., M, K]; b is [K, N] (shared across
// the batch) or [batch..., K, N]. With transpose_b, b's last two dims are
// [N, K] resp. [batch..., N, K]. Wrapping 64-bit accumulation.
inline RingTensor matmul(const RingTensor& a, const RingTensor& b, bool transpose_b = false) {
  if (a.ndim() < 2 || b.ndim() < 2) throw ShapeError("matmul: operands must have rank >= 2");
  std::size_t M = a.shape()[a.ndim() - 2];
  std::size_t K = a.shape()[a.ndim() - 1];
  std::size_t bk = transpose_b ? b.shape()[b.ndim() - 1] : b.shape()[b.ndim() - 2];
  std::size_t N = transpose_b ? b.shape()[b.ndim() - 2] : b.shape()[b.ndim() - 1];
  if (bk != K)
    throw ShapeError("matmul: inner dim mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::size_t batch = a.numel() / (M * K);
  bool batched_b = b.ndim() > 2;
  if (batched_b && b.numel() / (K * N) != batch)
    throw ShapeError("matmul: batch mismatch");
  if (!batched_b && b.numel() != K * N) throw ShapeError("matmul: rhs shape mismatch");

  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(N);
  RingTensor out(std::move(out_shape), 0);
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const u64* A = pa.data() + bi * M * K;
    const u64* B = pb.data() + (batched_b ? bi * K * N : 0);
    u64* O = po.data() + bi * M * N;
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t n = 0; n < N; ++n) {
        u64 acc = 0;
        if (!transpose_b) {
          for (std::size_t k = 0; k < K; ++k) acc = radd(acc, rmul(A[m * K + k], B[k * N + n]));
        } else {
          for (std::size_t k = 0; k < K; ++k) acc = radd(acc, rmul(A[m * K + k], B[n * K + k]));
        }
        O[m * N + n] = acc;
      }
    }
  }
  meter::charge(batch * M * N * K);
  return out;
}

}  // namespace mpcpipe
