#pragma once

// Log-depth binary adder over XOR-shared bit vectors.
//
// The circuit is a Sklansky-style prefix network on (generate, propagate)
// pairs packed into u64 lanes. Each level updates all lanes with ONE secure
// AND on a stacked (S, P) pair; the block-boundary bits are spread across
// their blocks with a constant integer multiply, which distributes over XOR
// shares because the masked operand has at most one live bit per block.
// A 64-bit add therefore costs 7 secure ANDs (1 + log2(64)) regardless of
// tensor size.

#include <array>
#include <string>
#include <utility>

#include "mpcpipe/protocols/beaver.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/sharing/triple.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

struct SpkConstants {
  int width = 64;   // ring width in bits; power of two, <= 64
  int levels = 6;   // log2(width)
  u64 word_mask = ~u64{0};
  std::array<u64, 6> in_masks{};   // block-boundary source bits per level
  std::array<u64, 6> out_masks{};  // block positions updated per level
  std::array<u64, 6> multipliers{};  // spreads a source bit across its block
};

// Level i works on blocks of 2^(i+1) bits: the top bit of each block's lower
// half (position == 2^i - 1 mod 2^(i+1)) is spread over the upper half
// (positions with p mod 2^(i+1) >= 2^i) by multiplying with 2*(2^(2^i) - 1).
constexpr SpkConstants make_spk_constants(int width) {
  SpkConstants c{};
  c.width = width;
  int m = 0;
  while ((1 << m) < width) ++m;
  c.levels = m;
  c.word_mask = width == 64 ? ~u64{0} : ((u64{1} << width) - 1);
  for (int i = 0; i < m; ++i) {
    u64 in = 0, out = 0;
    const u64 half = u64{1} << i;
    for (int p = 0; p < width; ++p) {
      u64 r = u64(p) & (2 * half - 1);
      if (r == half - 1) in |= u64{1} << p;
      if (r >= half) out |= u64{1} << p;
    }
    c.in_masks[std::size_t(i)] = in;
    c.out_masks[std::size_t(i)] = out;
    c.multipliers[std::size_t(i)] = ((u64{1} << half) - 1) << 1;
  }
  return c;
}

inline constexpr SpkConstants kSpk64 = make_spk_constants(64);
inline constexpr SpkConstants kSpk8 = make_spk_constants(8);

static_assert(kSpk64.in_masks[0] == 0x5555555555555555ull);
static_assert(kSpk64.in_masks[2] == 0x0808080808080808ull);
static_assert(kSpk64.in_masks[5] == 0x0000000080000000ull);
static_assert(kSpk64.out_masks[0] == 0xAAAAAAAAAAAAAAAAull);
static_assert(kSpk64.out_masks[3] == 0xFF00FF00FF00FF00ull);
static_assert(kSpk64.out_masks[5] == 0xFFFFFFFF00000000ull);
static_assert(kSpk64.multipliers[1] == 6 && kSpk64.multipliers[4] == 131070ull &&
              kSpk64.multipliers[5] == 8589934590ull);
static_assert(kSpk8.levels == 3 && kSpk8.word_mask == 0xFF);

// Plaintext evaluation of the same circuit; the secure version must agree
// with this bit for bit (and this must agree with integer addition).
constexpr u64 spk_add_plain(u64 a, u64 b, const SpkConstants& c = kSpk64) {
  u64 s = a & b;
  u64 p = a ^ b;
  const u64 p_orig = p;
  for (int i = 0; i < c.levels; ++i) {
    const u64 in = c.in_masks[std::size_t(i)];
    const u64 out = c.out_masks[std::size_t(i)];
    const u64 mult = c.multipliers[std::size_t(i)];
    const u64 p0 = p & out;
    const u64 upd_s = p0 & ((s & in) * mult);
    const u64 upd_p = p0 & ((p & in) * mult);
    p = (p & ~out) ^ upd_p;
    s ^= upd_s;
  }
  return (p_orig ^ (s << 1)) & c.word_mask;
}

static_assert(spk_add_plain(3, 1, kSpk8) == 4);
static_assert(spk_add_plain(0xFF, 1, kSpk8) == 0);  // wraps mod 2^width
static_assert(spk_add_plain(0xFFFFFFFFFFFFFFFFull, 2) == 1);

struct AdderOptions {
  int width = 64;
  bool merged = true;  // fuse the constant masking into the reveal/combine loops
  int chunks = 1;      // chunked reveals for the intra-op pipeline
};

namespace detail {

// One prefix level, straightforward form: materialize the masked operands as
// tensors and run the generic secure AND on the stacked pair.
inline void spk_level_plain(RingTensor& s, RingTensor& p, u64 in, u64 out, u64 mult,
                            TripleSource& triples, Communicator& comm, int party,
                            const std::string& tag, int chunks) {
  RingTensor p0 = and_scalar(p, out);
  RingTensor lhs = stack_pair(p0, p0);
  RingTensor rhs = mul_scalar(and_scalar(stack_pair(s, p), in), mult);
  BinaryShare upd = beaver_and(BinaryShare{party, std::move(lhs)},
                               BinaryShare{party, std::move(rhs)}, triples, comm, tag, chunks);
  auto [upd_s, upd_p] = unstack_pair(upd.tensor, s.shape());
  s = bit_xor(s, upd_s);
  p = bit_xor(and_scalar(p, ~out), upd_p);
}

// Fused-level chunk workers: the constant mask/spread work is folded into
// the per-chunk blinding and combine loops, so with chunking it overlaps the
// flight time of other chunks instead of running up front. Same triple and
// bit-identical S/P as the plain form.
inline RingTensor spk_build_chunk(const RingTensor& s, const RingTensor& p, const BeaverTriple& t,
                                  u64 in, u64 out, u64 mult, std::size_t lo, std::size_t w) {
  const std::size_t n = s.numel();
  const auto sd = s.data();
  const auto pd = p.data();
  const auto ad = t.a.data();
  const auto bd = t.b.data();
  RingTensor payload(Shape{4 * w});
  auto od = payload.data();
  for (std::size_t j = 0; j < w; ++j) {
    const u64 p0 = pd[lo + j] & out;
    od[j] = p0 ^ ad[lo + j];                                      // eps, S half
    od[w + j] = p0 ^ ad[n + lo + j];                              // eps, P half
    od[2 * w + j] = ((sd[lo + j] & in) * mult) ^ bd[lo + j];      // delta, S half
    od[3 * w + j] = ((pd[lo + j] & in) * mult) ^ bd[n + lo + j];  // delta, P half
  }
  meter::charge(9 * w);
  return payload;
}

inline void spk_combine_chunk(RingTensor& s, RingTensor& p, const BeaverTriple& t,
                              const RingTensor& rev, u64 out, int party, std::size_t lo,
                              std::size_t w) {
  const std::size_t n = s.numel();
  auto sd = s.data();
  auto pd = p.data();
  const auto ad = t.a.data();
  const auto bd = t.b.data();
  const auto cd = t.c.data();
  const auto rd = rev.data();
  for (std::size_t j = 0; j < w; ++j) {
    const u64 e0 = rd[j], e1 = rd[w + j];
    const u64 d0 = rd[2 * w + j], d1 = rd[3 * w + j];
    u64 z0 = cd[lo + j] ^ (e0 & bd[lo + j]) ^ (d0 & ad[lo + j]);
    u64 z1 = cd[n + lo + j] ^ (e1 & bd[n + lo + j]) ^ (d1 & ad[n + lo + j]);
    if (party == 0) {
      z0 ^= e0 & d0;
      z1 ^= e1 & d1;
    }
    sd[lo + j] ^= z0;
    pd[lo + j] = (pd[lo + j] & ~out) ^ z1;
  }
  meter::charge(11 * w);
}

inline void spk_level_merged(RingTensor& s, RingTensor& p, u64 in, u64 out, u64 mult,
                             TripleSource& triples, Communicator& comm, int party,
                             const std::string& tag, int chunks) {
  const std::size_t n = s.numel();
  Shape stacked;
  stacked.push_back(2);
  for (auto d : s.shape()) stacked.push_back(d);
  BeaverTriple t = triples.fetch(TripleSpec::elementwise(TripleKind::Bin, stacked), tag);
  t.mark_consumed();
  chunks = clamp_chunks(chunks, n);

  std::vector<SendHandle> handles;
  handles.reserve(std::size_t(chunks));
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = chunk_range(n, chunks, k);
    handles.push_back(
        comm.reveal_async(spk_build_chunk(s, p, t, in, out, mult, lo, hi - lo), Reduce::Xor, tag));
  }
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = chunk_range(n, chunks, k);
    spk_combine_chunk(s, p, t, comm.wait(handles[std::size_t(k)]), out, party, lo, hi - lo);
  }
}

// The initial generate/propagate AND, one chunk at a time. Same triple and
// per-element math as a beaver_and over the whole operand pair.
inline RingTensor gp_build_chunk(const RingTensor& x, const RingTensor& y, const BeaverTriple& t,
                                 std::size_t lo, std::size_t w) {
  const auto xd = x.data();
  const auto yd = y.data();
  const auto ad = t.a.data();
  const auto bd = t.b.data();
  RingTensor payload(Shape{2 * w});
  auto od = payload.data();
  for (std::size_t j = 0; j < w; ++j) {
    od[j] = xd[lo + j] ^ ad[lo + j];      // eps
    od[w + j] = yd[lo + j] ^ bd[lo + j];  // delta
  }
  meter::charge(3 * w);
  return payload;
}

inline void gp_combine_chunk(RingTensor& s, const BeaverTriple& t, const RingTensor& rev,
                             int party, std::size_t lo, std::size_t w) {
  auto sd = s.data();
  const auto ad = t.a.data();
  const auto bd = t.b.data();
  const auto cd = t.c.data();
  const auto rd = rev.data();
  for (std::size_t j = 0; j < w; ++j) {
    const u64 e = rd[j], d = rd[w + j];
    u64 z = cd[lo + j] ^ (e & bd[lo + j]) ^ (d & ad[lo + j]);
    if (party == 0) z ^= e & d;
    sd[lo + j] = z;
  }
  meter::charge(6 * w);
}

}  // namespace detail

// z = x + y mod 2^width on XOR-shared operands. 1 + log2(width) secure ANDs,
// each one collective (or `chunks` collectives when chunked).
//
// The chunked merged form chains the AND rounds: revealing chunk c of one
// round unblocks building and issuing chunk c of the next round while the
// remaining chunks of the current round are still in flight, so after the
// first round only the pipeline fill pays the full round-trip. Each round
// still issues all of its chunks before waiting on any of them, the rounds
// consume the same triples in the same tag order as the blocking form, and
// the result is bit-identical.
inline BinaryShare binary_add(const BinaryShare& x, const BinaryShare& y, TripleSource& triples,
                              Communicator& comm, const AdderOptions& opt = {},
                              const std::string& tag = "badd") {
  detail::require_same_shape(x.tensor, y.tensor, "binary_add");
  if (x.party != y.party) throw UsageError("binary_add: mismatched party ids");
  const SpkConstants c = make_spk_constants(opt.width);
  const int party = comm.party();
  const std::size_t n = x.tensor.numel();
  const int chunks = detail::clamp_chunks(opt.chunks, n);

  if (chunks <= 1 || !opt.merged) {
    BinaryShare g = beaver_and(x, y, triples, comm, tag + ".g", chunks);
    RingTensor s = std::move(g.tensor);
    RingTensor p = bit_xor(x.tensor, y.tensor);
    const RingTensor p_orig = p;

    for (int i = 0; i < c.levels; ++i) {
      const std::string ltag = tag + ".l" + std::to_string(i);
      if (opt.merged)
        detail::spk_level_merged(s, p, c.in_masks[std::size_t(i)], c.out_masks[std::size_t(i)],
                                 c.multipliers[std::size_t(i)], triples, comm, party, ltag,
                                 chunks);
      else
        detail::spk_level_plain(s, p, c.in_masks[std::size_t(i)], c.out_masks[std::size_t(i)],
                                c.multipliers[std::size_t(i)], triples, comm, party, ltag,
                                chunks);
    }

    RingTensor sum = bit_xor(p_orig, shl(s, 1));
    if (c.width < 64) sum = and_scalar(sum, c.word_mask);
    return BinaryShare{party, std::move(sum)};
  }

  // Round 0 is the generate/propagate AND, rounds 1..levels the prefix
  // levels. One outstanding reveal per chunk lane.
  const int rounds = 1 + c.levels;
  RingTensor s(x.tensor.shape());
  RingTensor p = bit_xor(x.tensor, y.tensor);
  const RingTensor p_orig = p;

  std::vector<BeaverTriple> trips;
  trips.reserve(std::size_t(rounds));
  auto fetch_round = [&](int r) {
    if (r == 0) {
      trips.push_back(
          triples.fetch(TripleSpec::elementwise(TripleKind::Bin, x.tensor.shape()), tag + ".g"));
    } else {
      Shape stacked;
      stacked.push_back(2);
      for (auto d : x.tensor.shape()) stacked.push_back(d);
      trips.push_back(triples.fetch(TripleSpec::elementwise(TripleKind::Bin, stacked),
                                    tag + ".l" + std::to_string(r - 1)));
    }
    trips.back().mark_consumed();
  };
  auto round_tag = [&](int r) { return r == 0 ? tag + ".g" : tag + ".l" + std::to_string(r - 1); };
  auto issue = [&](int r, int lane) {
    auto [lo, hi] = detail::chunk_range(n, chunks, lane);
    RingTensor payload =
        r == 0 ? detail::gp_build_chunk(x.tensor, y.tensor, trips[0], lo, hi - lo)
               : detail::spk_build_chunk(s, p, trips[std::size_t(r)], c.in_masks[std::size_t(r - 1)],
                                         c.out_masks[std::size_t(r - 1)],
                                         c.multipliers[std::size_t(r - 1)], lo, hi - lo);
    return comm.reveal_async(payload, Reduce::Xor, round_tag(r));
  };
  auto settle = [&](int r, int lane, SendHandle h) {
    auto [lo, hi] = detail::chunk_range(n, chunks, lane);
    RingTensor rev = comm.wait(h);
    if (r == 0)
      detail::gp_combine_chunk(s, trips[0], rev, party, lo, hi - lo);
    else
      detail::spk_combine_chunk(s, p, trips[std::size_t(r)], rev,
                                c.out_masks[std::size_t(r - 1)], party, lo, hi - lo);
  };

  std::vector<SendHandle> hs(static_cast<std::size_t>(chunks));
  fetch_round(0);
  for (int lane = 0; lane < chunks; ++lane) hs[std::size_t(lane)] = issue(0, lane);
  for (int r = 1; r < rounds; ++r) {
    fetch_round(r);
    for (int lane = 0; lane < chunks; ++lane) {
      settle(r - 1, lane, hs[std::size_t(lane)]);
      hs[std::size_t(lane)] = issue(r, lane);
    }
  }
  for (int lane = 0; lane < chunks; ++lane) settle(rounds - 1, lane, hs[std::size_t(lane)]);

  RingTensor sum = bit_xor(p_orig, shl(s, 1));
  if (c.width < 64) sum = and_scalar(sum, c.word_mask);
  return BinaryShare{party, std::move(sum)};
}

}  // namespace mpcpipe
