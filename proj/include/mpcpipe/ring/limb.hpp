#pragma once

#include <string>
#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"

namespace mpcpipe {

// Decomposition of 64-bit operands into narrower limbs so the products fit a
// floating-point multiplier. The carrier mantissa bounds how many products a
// block may accumulate: 52 - 2*16 = 20 bits for 16-bit limbs in a double,
// 22 - 2*4 = 14 bits for 4-bit limbs in a float.
struct LimbPlan {
  int limb_bits = 16;
  int num_limbs = 4;
  int accum_budget_bits = 20;

  static LimbPlan limbs16() { return LimbPlan{16, 4, 20}; }
  static LimbPlan limbs4() { return LimbPlan{4, 16, 14}; }
};

namespace detail {

template <class Carrier>
RingTensor limb_matmul_impl(const RingTensor& a, const RingTensor& b, const LimbPlan& plan) {
  std::size_t M = a.shape()[a.ndim() - 2];
  std::size_t K = a.shape()[a.ndim() - 1];
  std::size_t N = b.shape()[b.ndim() - 1];
  std::size_t batch = a.numel() / (M * K);

  const int lb = plan.limb_bits;
  const int nl = plan.num_limbs;
  const u64 mask = (lb == 64) ? ~u64(0) : ((u64(1) << lb) - 1);

  // Limb views of both operands, one Carrier matrix per limb index.
  std::vector<std::vector<Carrier>> alimb(nl), blimb(nl);
  for (int l = 0; l < nl; ++l) {
    alimb[l].resize(a.numel());
    blimb[l].resize(b.numel());
    for (std::size_t i = 0; i < a.numel(); ++i)
      alimb[l][i] = static_cast<Carrier>((a.at(i) >> (l * lb)) & mask);
    for (std::size_t i = 0; i < b.numel(); ++i)
      blimb[l][i] = static_cast<Carrier>((b.at(i) >> (l * lb)) & mask);
  }

  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(N);
  RingTensor out(std::move(out_shape), 0);
  auto po = out.data();

  std::vector<Carrier> block(M * N);
  for (std::size_t bi = 0; bi < batch; ++bi) {
    u64* O = po.data() + bi * M * N;
    // Limb pairs with l+m >= num_limbs shift past bit 63 and vanish mod 2^64.
    for (int l = 0; l < nl; ++l) {
      for (int m = 0; m + l < nl; ++m) {
        const Carrier* A = alimb[l].data() + bi * M * K;
        const Carrier* B = blimb[m].data();
        if (b.ndim() > 2) B += bi * K * N;
        for (std::size_t r = 0; r < M; ++r)
          for (std::size_t c = 0; c < N; ++c) {
            Carrier acc = 0;
            for (std::size_t k = 0; k < K; ++k) acc += A[r * K + k] * B[k * N + c];
            block[r * N + c] = acc;
          }
        int shift = (l + m) * lb;
        for (std::size_t i = 0; i < M * N; ++i) {
          // Each block sum is an exact integer within the carrier mantissa.
          u64 v = static_cast<u64>(block[i]);
          O[i] = radd(O[i], v << shift);
        }
      }
    }
  }
  meter::charge(batch * M * N * K * static_cast<std::size_t>(nl) * nl / 2);
  return out;
}

}  // namespace detail

// Matrix product computed limb-by-limb in a floating-point carrier of the
// plan's width, recombined with shifted wrapping accumulation. Bit-identical
// to matmul() whenever the inner dimension fits the accumulation budget.
inline RingTensor limb_matmul(const RingTensor& a, const RingTensor& b, const LimbPlan& plan) {
  if (a.ndim() < 2 || b.ndim() < 2) throw ShapeError("limb_matmul: operands must have rank >= 2");
  std::size_t K = a.shape()[a.ndim() - 1];
  if (b.shape()[b.ndim() - 2] != K)
    throw ShapeError("limb_matmul: inner dim mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  if (plan.limb_bits * plan.num_limbs != 64) throw ConfigError("limb_matmul: plan does not cover 64 bits");
  if (K > (std::size_t(1) << plan.accum_budget_bits))
    throw BudgetError("limb_matmul: inner dim " + std::to_string(K) +
                      " exceeds accumulation budget 2^" + std::to_string(plan.accum_budget_bits));
  if (plan.limb_bits == 4) return detail::limb_matmul_impl<float>(a, b, plan);
  if (plan.limb_bits == 16) return detail::limb_matmul_impl<double>(a, b, plan);
  throw ConfigError("limb_matmul: unsupported limb width " + std::to_string(plan.limb_bits));
}

}  // namespace mpcpipe
