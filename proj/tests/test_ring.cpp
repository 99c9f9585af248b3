#include <catch2/catch_amalgamated.hpp>

#include "mpcpipe/ring/fixed.hpp"
#include "mpcpipe/ring/limb.hpp"
#include "mpcpipe/ring/ring_ops.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/rng.hpp"

using namespace mpcpipe;

namespace {

RingTensor random_tensor(Shape shape, CounterRng& rng) {
  RingTensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng();
  return t;
}

// Reference product with unbounded intermediates, truncated to 64 bits last.
RingTensor wide_matmul(const RingTensor& a, const RingTensor& b, bool transpose_b = false) {
  std::size_t M = a.shape()[a.ndim() - 2];
  std::size_t K = a.shape()[a.ndim() - 1];
  std::size_t N = transpose_b ? b.shape()[b.ndim() - 2] : b.shape()[b.ndim() - 1];
  std::size_t batch = a.numel() / (M * K);
  bool batched_b = b.ndim() > 2;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(N);
  RingTensor out(out_shape);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) {
        unsigned __int128 acc = 0;
        for (std::size_t k = 0; k < K; ++k) {
          u64 av = a.at(bi * M * K + m * K + k);
          u64 bv = transpose_b ? b.at((batched_b ? bi * N * K : 0) + n * K + k)
                               : b.at((batched_b ? bi * K * N : 0) + k * N + n);
          acc += static_cast<unsigned __int128>(av) * bv;
        }
        out.at(bi * M * N + m * N + n) = static_cast<u64>(acc);
      }
  return out;
}

}  // namespace

TEST_CASE("scalar ring ops wrap") {
  REQUIRE(radd(~u64(0), 1) == 0);
  REQUIRE(rsub(0, 1) == ~u64(0));
  REQUIRE(rmul(u64(1) << 32, u64(1) << 32) == 0);
  REQUIRE(rmul(3, 4) == 12);
  REQUIRE(rneg(5) == rsub(0, 5));
  REQUIRE(to_signed(from_signed(-17)) == -17);
  REQUIRE(sar(from_signed(-256), 4) == from_signed(-16));
  REQUIRE(sar(256, 4) == 16);
  REQUIRE(msb_bit(from_signed(-1)) == 1);
  REQUIRE(msb_bit(1) == 0);
}

TEST_CASE("tensor elementwise ops and shape checks") {
  RingTensor a({2, 2}, {1, 2, 3, ~u64(0)});
  RingTensor b({2, 2}, {10, 20, 30, 1});
  auto s = add(a, b);
  REQUIRE(s.at(0) == 11);
  REQUIRE(s.at(3) == 0);
  REQUIRE(sub(s, b) == a);
  REQUIRE(mul(a, b).at(1) == 40);
  REQUIRE(bit_xor(a, a) == RingTensor({2, 2}));
  REQUIRE(bit_and(a, b).at(2) == (3ull & 30ull));
  REQUIRE(add(neg(a), a) == RingTensor({2, 2}));
  RingTensor c({3});
  REQUIRE_THROWS_AS(add(a, c), ShapeError);
  REQUIRE_THROWS_AS(RingTensor({2, 2}, {1, 2, 3}), ShapeError);
}

TEST_CASE("slicing, stacking and reshaping") {
  RingTensor a({6}, {0, 1, 2, 3, 4, 5});
  auto mid = slice_elems(a, 2, 5);
  REQUIRE(mid.shape() == Shape{3});
  REQUIRE(mid.at(0) == 2);
  auto r = reshape(a, {2, 3});
  REQUIRE(r.dim(0) == 2);
  REQUIRE_THROWS_AS(reshape(a, {4}), ShapeError);

  RingTensor x({2}, {7, 8});
  RingTensor y({2}, {9, 10});
  auto sp = stack_pair(x, y);
  REQUIRE(sp.shape() == Shape{2, 2});
  auto [x2, y2] = unstack_pair(sp, {2});
  REQUIRE(x2 == x);
  REQUIRE(y2 == y);

  auto rows = slice_rows(a, 3, 1, 2);
  REQUIRE(rows.at(0) == 3);

  RingTensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  auto sums = sum_last_dim(m);
  REQUIRE(sums.shape() == Shape{2, 1});
  REQUIRE(sums.at(0) == 6);
  REQUIRE(sums.at(1) == 15);
  auto bc = broadcast_last(sums, 3);
  REQUIRE(bc.shape() == Shape{2, 3});
  REQUIRE(bc.at(2) == 6);
  REQUIRE(bc.at(3) == 15);
}

TEST_CASE("matmul agrees with wide-integer reference") {
  CounterRng rng(0xA11CE);
  SECTION("plain 2-D") {
    auto a = random_tensor({5, 7}, rng);
    auto b = random_tensor({7, 4}, rng);
    REQUIRE(matmul(a, b) == wide_matmul(a, b));
  }
  SECTION("batched lhs, shared rhs") {
    auto a = random_tensor({3, 4, 6}, rng);
    auto b = random_tensor({6, 2}, rng);
    REQUIRE(matmul(a, b) == wide_matmul(a, b));
  }
  SECTION("batched both, transposed rhs") {
    auto a = random_tensor({2, 3, 5}, rng);
    auto b = random_tensor({2, 4, 5}, rng);
    auto got = matmul(a, b, true);
    REQUIRE(got == wide_matmul(a, b, true));
    REQUIRE(got.shape() == Shape{2, 3, 4});
  }
  SECTION("inner dim mismatch rejected") {
    RingTensor a({2, 3});
    RingTensor b({4, 2});
    REQUIRE_THROWS_AS(matmul(a, b), ShapeError);
  }
}

TEST_CASE("fixed-point encode/decode") {
  REQUIRE(encode_fixed(1.5, 16) == u64(3) << 15);
  REQUIRE(encode_fixed(-1.0, 16) == from_signed(-(i64(1) << 16)));
  REQUIRE(decode_fixed(encode_fixed(0.125, 16), 16) == 0.125);
  // Ties round toward +inf at half-ulp.
  REQUIRE(encode_fixed(0.5 / 65536.0, 16) == 1);

  CounterRng rng(7);
  for (int i = 0; i < 200; ++i) {
    double x = (to_signed(rng()) % 100000) / 1000.0;
    double back = decode_fixed(encode_fixed(x, 16), 16);
    REQUIRE(std::abs(back - x) <= std::exp2(-17));
  }
  REQUIRE_THROWS_AS(encode_fixed(1e30, 16), RangeError);
  REQUIRE_THROWS_AS(encode_fixed(-1e30, 16), RangeError);
}

TEST_CASE("truncate rescales a fixed-point product") {
  auto x = encode_tensor({1.5, -2.25, 0.0, 100.0}, {4});
  auto y = encode_tensor({2.0, 3.0, 5.0, -0.5}, {4});
  auto prod = truncate(mul(x, y), kDefaultScaleBits);
  REQUIRE(prod.scale_bits() == kDefaultScaleBits);
  auto vals = decode_tensor(prod);
  double expect[] = {3.0, -6.75, 0.0, -50.0};
  for (int i = 0; i < 4; ++i) REQUIRE(std::abs(vals[i] - expect[i]) <= std::exp2(-15));
}

TEST_CASE("limb matmul is bit-identical to direct matmul") {
  CounterRng rng(0xB0B);
  for (auto plan : {LimbPlan::limbs16(), LimbPlan::limbs4()}) {
    for (int rep = 0; rep < 8; ++rep) {
      std::size_t m = 1 + rng() % 6, k = 1 + rng() % 8, n = 1 + rng() % 6;
      auto a = random_tensor({m, k}, rng);
      auto b = random_tensor({k, n}, rng);
      REQUIRE(limb_matmul(a, b, plan) == matmul(a, b));
    }
  }
}

TEST_CASE("limb matmul enforces the accumulation budget") {
  LimbPlan tight = LimbPlan::limbs4();  // budget 2^14
  std::size_t K = (std::size_t(1) << 14) + 1;
  RingTensor a({1, K});
  RingTensor b({K, 1});
  REQUIRE_THROWS_AS(limb_matmul(a, b, tight), BudgetError);
  LimbPlan bad{8, 4, 20};  // 8*4 != 64
  RingTensor small_a({1, 2});
  RingTensor small_b({2, 1});
  REQUIRE_THROWS_AS(limb_matmul(small_a, small_b, bad), ConfigError);
}

TEST_CASE("work meter accumulates and drains") {
  meter::drain();
  RingTensor a({16});
  RingTensor b({16});
  (void)add(a, b);
  auto w = meter::drain();
  REQUIRE(w.units == 16);
  REQUIRE(w.dispatches == 1);
  REQUIRE(meter::drain().units == 0);
}
