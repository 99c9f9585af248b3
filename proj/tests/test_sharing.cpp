#include <catch2/catch_amalgamated.hpp>
#include <cstdio>

#include "mpcpipe/ring/fixed.hpp"
#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/sharing/triple.hpp"

using namespace mpcpipe;

namespace {

struct FixedRng {
  u64 v;
  u64 operator()() { return v; }
};

RingTensor random_tensor(Shape shape, CounterRng& rng) {
  RingTensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng();
  return t;
}

}  // namespace

TEST_CASE("counter rng is reproducible and seekable") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
  CounterRng c(42, 1);
  REQUIRE(c() != CounterRng(42)());
  CounterRng d(42);
  for (int i = 0; i < 10; ++i) (void)d();
  CounterRng e(42);
  e.seek(10);
  REQUIRE(d() == e());
}

TEST_CASE("additive sharing: party 0 absorbs the randomness") {
  RingTensor x({1}, std::vector<u64>{5});
  FixedRng r{3};
  auto shares = share_additive(x, 2, r);
  REQUIRE(shares[0].tensor.at(0) == 2);
  REQUIRE(shares[1].tensor.at(0) == 3);
  REQUIRE(reconstruct(shares).at(0) == 5);
}

TEST_CASE("share/reconstruct round trips") {
  CounterRng rng(0xDEED);
  for (int n : {2, 3}) {
    auto x = random_tensor({4, 5}, rng);
    x.set_scale_bits(16);
    auto add_sh = share_additive(x, n, rng);
    REQUIRE(static_cast<int>(add_sh.size()) == n);
    REQUIRE(reconstruct(add_sh) == x);
    REQUIRE(add_sh[0].tensor.scale_bits() == 16);

    auto bin_sh = share_binary(x, n, rng);
    REQUIRE(reconstruct(bin_sh) == x);
    // Individual shares look nothing like the secret for n >= 2.
    REQUIRE(!(bin_sh[0].tensor == x));
  }
  REQUIRE_THROWS_AS(share_additive(RingTensor({1}), 1, rng), ConfigError);
}

TEST_CASE("dealer triples satisfy their defining relation") {
  CounterRng rng(0xF00D);
  SECTION("arithmetic elementwise") {
    auto spec = TripleSpec::elementwise(TripleKind::Arith, {3, 3});
    auto set = dealer_gen_triple(spec, 3, rng);
    std::vector<AdditiveShare> as, bs, cs;
    for (auto& t : set.per_party) {
      as.push_back({t.party, t.a});
      bs.push_back({t.party, t.b});
      cs.push_back({t.party, t.c});
    }
    auto A = reconstruct(as), B = reconstruct(bs), C = reconstruct(cs);
    REQUIRE(C == mul(A, B));
  }
  SECTION("binary elementwise") {
    auto spec = TripleSpec::elementwise(TripleKind::Bin, {8});
    auto set = dealer_gen_triple(spec, 2, rng);
    std::vector<BinaryShare> as, bs, cs;
    for (auto& t : set.per_party) {
      as.push_back({t.party, t.a});
      bs.push_back({t.party, t.b});
      cs.push_back({t.party, t.c});
    }
    REQUIRE(reconstruct(cs) == bit_and(reconstruct(as), reconstruct(bs)));
  }
  SECTION("matmul, including transposed") {
    for (bool tr : {false, true}) {
      auto spec = TripleSpec::matmul_of({4, 6}, tr ? Shape{5, 6} : Shape{6, 5}, tr);
      auto set = dealer_gen_triple(spec, 2, rng);
      std::vector<AdditiveShare> as, bs, cs;
      for (auto& t : set.per_party) {
        as.push_back({t.party, t.a});
        bs.push_back({t.party, t.b});
        cs.push_back({t.party, t.c});
      }
      REQUIRE(reconstruct(cs) == matmul(reconstruct(as), reconstruct(bs), tr));
    }
  }
  SECTION("square triples reuse a as b") {
    auto spec = TripleSpec::square_of({7});
    auto set = dealer_gen_triple(spec, 3, rng);
    std::vector<AdditiveShare> as, bs, cs;
    for (auto& t : set.per_party) {
      as.push_back({t.party, t.a});
      bs.push_back({t.party, t.b});
      cs.push_back({t.party, t.c});
    }
    auto A = reconstruct(as);
    REQUIRE(reconstruct(bs) == A);
    REQUIRE(reconstruct(cs) == mul(A, A));
  }
}

TEST_CASE("seeded dealers agree across parties without communication") {
  auto spec1 = TripleSpec::elementwise(TripleKind::Arith, {16});
  auto spec2 = TripleSpec::matmul_of({2, 3}, {3, 2});
  // Three isolated dealer instances (as in separate processes).
  SeededDealer d0(99, 0, 3), d1(99, 1, 3), d2(99, 2, 3);
  for (auto* spec : {&spec1, &spec2}) {
    auto t0 = d0.fetch(*spec);
    auto t1 = d1.fetch(*spec);
    auto t2 = d2.fetch(*spec);
    std::vector<AdditiveShare> as = {{0, t0.a}, {1, t1.a}, {2, t2.a}};
    std::vector<AdditiveShare> bs = {{0, t0.b}, {1, t1.b}, {2, t2.b}};
    std::vector<AdditiveShare> cs = {{0, t0.c}, {1, t1.c}, {2, t2.c}};
    bool tr = spec->op == TripleOp::Matmul;
    auto C = tr ? matmul(reconstruct(as), reconstruct(bs)) : mul(reconstruct(as), reconstruct(bs));
    REQUIRE(reconstruct(cs) == C);
  }
  // Different seed produces a different stream.
  SeededDealer other(100, 0, 3);
  REQUIRE(!(other.fetch(spec1).a == SeededDealer(99, 0, 3).fetch(spec1).a));
}

TEST_CASE("triples are consumed exactly once") {
  CounterRng rng(1);
  auto set = dealer_gen_triple(TripleSpec::elementwise(TripleKind::Arith, {2}), 2, rng);
  auto& t = set.per_party[0];
  t.mark_consumed();
  REQUIRE_THROWS_AS(t.mark_consumed(), ProtocolError);
}

TEST_CASE("triple queue files round trip") {
  CounterRng rng(0xCAFE);
  std::vector<TripleSet> sets;
  sets.push_back(dealer_gen_triple(TripleSpec::elementwise(TripleKind::Bin, {4}), 2, rng));
  sets.push_back(dealer_gen_triple(TripleSpec::matmul_of({2, 4}, {4, 3}), 2, rng));
  sets.push_back(dealer_gen_triple(TripleSpec::square_of({5}), 2, rng));

  std::string path = "triples_test.bin";
  save_triples(path, sets);
  auto loaded = load_triples(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    REQUIRE(loaded[i].spec == sets[i].spec);
    REQUIRE(loaded[i].per_party.size() == sets[i].per_party.size());
    for (std::size_t p = 0; p < sets[i].per_party.size(); ++p) {
      REQUIRE(loaded[i].per_party[p].a == sets[i].per_party[p].a);
      REQUIRE(loaded[i].per_party[p].b == sets[i].per_party[p].b);
      REQUIRE(loaded[i].per_party[p].c == sets[i].per_party[p].c);
    }
  }

  // Queue source replays in order and rejects out-of-order specs.
  std::vector<BeaverTriple> mine;
  for (auto& s : loaded) mine.push_back(s.per_party[0]);
  QueueTripleSource q(std::move(mine));
  REQUIRE(q.fetch(sets[0].spec).spec == sets[0].spec);
  REQUIRE_THROWS_AS(q.fetch(sets[0].spec), ProtocolError);  // next record is matmul
}

TEST_CASE("2PC local truncation stays within one ulp per party") {
  CounterRng rng(0x7A7A);
  // Two-party local share truncation: each party shifts its own share; the
  // reconstruction differs from shifting the secret by at most one low-order
  // unit per party (the ring-wrap failure needs |secret| ~ 2^64 to show up;
  // three-party truncation routes through the protocol layer instead).
  auto x = encode_tensor({1.25, -3.5, 0.0625, 42.0}, {4});
  auto y = encode_tensor({2.0, 1.5, -8.0, 0.25}, {4});
  auto prod = mul(x, y);  // data at scale 32, nominal scale 16
  for (int rep = 0; rep < 50; ++rep) {
    auto shares = share_additive(prod, 2, rng);
    for (auto& s : shares) s.tensor = truncate(s.tensor, kDefaultScaleBits);
    auto got = decode_tensor(reconstruct(shares));
    double expect[] = {2.5, -5.25, -0.5, 10.5};
    for (int i = 0; i < 4; ++i)
      REQUIRE(std::abs(got[i] - expect[i]) <= 2 * std::exp2(-kDefaultScaleBits));
  }
}
