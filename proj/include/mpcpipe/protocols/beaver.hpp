#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/sharing/triple.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

// Beaver-triple multiplication. Parties reveal eps = X - A and delta = Y - B
// (both uniformly masked), then each computes
//   [z] = [c] + eps*[b] + delta*[a]   (+ eps*delta on party 0 only)
// so that sum([z]) = X*Y mod 2^64. The AND variant swaps +/* for XOR/AND.
//
// Blocking mode reveals eps and delta stacked as a single collective; the
// chunked ("inner pipeline") variants slice the op into `chunks` pieces,
// reveal them back-to-back and fold the combine step of piece k under the
// flight time of pieces k+1..n. Both modes consume the same triple and
// produce bit-identical shares.

namespace detail {

inline int clamp_chunks(int chunks, std::size_t numel) {
  if (chunks < 1) chunks = 1;
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(chunks),
                                                numel ? numel : 1));
}

inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t total, int chunks, int k) {
  std::size_t lo = total * static_cast<std::size_t>(k) / static_cast<std::size_t>(chunks);
  std::size_t hi = total * (static_cast<std::size_t>(k) + 1) / static_cast<std::size_t>(chunks);
  return {lo, hi};
}

}  // namespace detail

// ---- elementwise multiply ------------------------------------------------

inline AdditiveShare beaver_mul(const AdditiveShare& x, const AdditiveShare& y,
                                TripleSource& triples, Communicator& comm,
                                const std::string& tag = "mul", int chunks = 1) {
  detail::require_same_shape(x.tensor, y.tensor, "beaver_mul");
  const int party = comm.party();
  BeaverTriple t = triples.fetch(TripleSpec::elementwise(TripleKind::Arith, x.tensor.shape()), tag);
  t.mark_consumed();
  chunks = detail::clamp_chunks(chunks, x.tensor.numel());

  if (chunks == 1) {
    RingTensor local = stack_pair(sub(x.tensor, t.a), sub(y.tensor, t.b));
    SendHandle h = comm.reveal_async(local, Reduce::Sum, tag);
    RingTensor ed = comm.wait(h);
    auto [eps, delta] = unstack_pair(ed, x.tensor.shape());
    RingTensor z = add(t.c, add(mul(eps, t.b), mul(delta, t.a)));
    if (party == 0) z = add(z, mul(eps, delta));
    z.set_scale_bits(x.tensor.scale_bits());
    return AdditiveShare{party, std::move(z)};
  }

  std::size_t total = x.tensor.numel();
  std::vector<SendHandle> handles;
  handles.reserve(static_cast<std::size_t>(chunks));
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    RingTensor local = stack_pair(sub(slice_elems(x.tensor, lo, hi), slice_elems(t.a, lo, hi)),
                                  sub(slice_elems(y.tensor, lo, hi), slice_elems(t.b, lo, hi)));
    handles.push_back(comm.reveal_async(local, Reduce::Sum, tag + ".chunk" + std::to_string(k)));
  }
  RingTensor z(x.tensor.shape(), x.tensor.scale_bits());
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    RingTensor ed = comm.wait(handles[static_cast<std::size_t>(k)]);
    auto [eps, delta] = unstack_pair(ed, Shape{hi - lo});
    RingTensor zk = add(slice_elems(t.c, lo, hi),
                        add(mul(eps, slice_elems(t.b, lo, hi)),
                            mul(delta, slice_elems(t.a, lo, hi))));
    if (party == 0) zk = add(zk, mul(eps, delta));
    copy_into(z, lo, zk);
  }
  return AdditiveShare{party, std::move(z)};
}

// Squaring consumes a unary triple (a, a, a^2) and reveals only eps = X - A:
//   [z] = [c] + 2*eps*[a]   (+ eps^2 on party 0),   sum([z]) = X^2.
inline AdditiveShare beaver_square(const AdditiveShare& x, TripleSource& triples,
                                   Communicator& comm, const std::string& tag = "square",
                                   int chunks = 1) {
  const int party = comm.party();
  BeaverTriple t = triples.fetch(TripleSpec::square_of(x.tensor.shape()), tag);
  t.mark_consumed();
  chunks = detail::clamp_chunks(chunks, x.tensor.numel());

  auto combine = [&](const RingTensor& eps, const RingTensor& a_sl, const RingTensor& c_sl) {
    RingTensor zk = add(c_sl, mul_scalar(mul(eps, a_sl), 2));
    if (party == 0) zk = add(zk, mul(eps, eps));
    return zk;
  };

  if (chunks == 1) {
    SendHandle h = comm.reveal_async(sub(x.tensor, t.a), Reduce::Sum, tag);
    RingTensor eps = comm.wait(h);
    RingTensor z = combine(eps, t.a, t.c);
    z.set_scale_bits(x.tensor.scale_bits());
    return AdditiveShare{party, std::move(z)};
  }

  std::size_t total = x.tensor.numel();
  std::vector<SendHandle> handles;
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    handles.push_back(comm.reveal_async(
        sub(slice_elems(x.tensor, lo, hi), slice_elems(t.a, lo, hi)), Reduce::Sum,
        tag + ".chunk" + std::to_string(k)));
  }
  RingTensor z(x.tensor.shape(), x.tensor.scale_bits());
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    RingTensor eps = comm.wait(handles[static_cast<std::size_t>(k)]);
    copy_into(z, lo, combine(eps, slice_elems(t.a, lo, hi), slice_elems(t.c, lo, hi)));
  }
  return AdditiveShare{party, std::move(z)};
}

// ---- elementwise AND -----------------------------------------------------

inline BinaryShare beaver_and(const BinaryShare& x, const BinaryShare& y,
                              TripleSource& triples, Communicator& comm,
                              const std::string& tag = "and", int chunks = 1) {
  detail::require_same_shape(x.tensor, y.tensor, "beaver_and");
  const int party = comm.party();
  BeaverTriple t = triples.fetch(TripleSpec::elementwise(TripleKind::Bin, x.tensor.shape()), tag);
  t.mark_consumed();
  chunks = detail::clamp_chunks(chunks, x.tensor.numel());

  if (chunks == 1) {
    RingTensor local = stack_pair(bit_xor(x.tensor, t.a), bit_xor(y.tensor, t.b));
    SendHandle h = comm.reveal_async(local, Reduce::Xor, tag);
    RingTensor ed = comm.wait(h);
    auto [eps, delta] = unstack_pair(ed, x.tensor.shape());
    RingTensor z = bit_xor(t.c, bit_xor(bit_and(eps, t.b), bit_and(delta, t.a)));
    if (party == 0) z = bit_xor(z, bit_and(eps, delta));
    return BinaryShare{party, std::move(z)};
  }

  std::size_t total = x.tensor.numel();
  std::vector<SendHandle> handles;
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    RingTensor local =
        stack_pair(bit_xor(slice_elems(x.tensor, lo, hi), slice_elems(t.a, lo, hi)),
                   bit_xor(slice_elems(y.tensor, lo, hi), slice_elems(t.b, lo, hi)));
    handles.push_back(comm.reveal_async(local, Reduce::Xor, tag + ".chunk" + std::to_string(k)));
  }
  RingTensor z(x.tensor.shape(), x.tensor.scale_bits());
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(total, chunks, k);
    RingTensor ed = comm.wait(handles[static_cast<std::size_t>(k)]);
    auto [eps, delta] = unstack_pair(ed, Shape{hi - lo});
    RingTensor zk = bit_xor(slice_elems(t.c, lo, hi),
                            bit_xor(bit_and(eps, slice_elems(t.b, lo, hi)),
                                    bit_and(delta, slice_elems(t.a, lo, hi))));
    if (party == 0) zk = bit_xor(zk, bit_and(eps, delta));
    copy_into(z, lo, zk);
  }
  return BinaryShare{party, std::move(z)};
}

// ---- matrix multiply -----------------------------------------------------

// Final combine of a matmul triple with revealed eps/delta; shared between
// the blocking path below and the engine's pre-transmitted-delta path.
inline RingTensor matmul_combine(const BeaverTriple& t, const RingTensor& eps,
                                 const RingTensor& delta, bool transpose_b, int party) {
  RingTensor z = add(t.c, add(matmul(eps, t.b, transpose_b), matmul(t.a, delta, transpose_b)));
  if (party == 0) z = add(z, matmul(eps, delta, transpose_b));
  return z;
}

// Eps and delta stay separate collectives here: delta depends only on the
// rhs (the weights, for linear layers), which is what the inter-layer
// pipeline pre-transmits. See dense_private in the engine for the split
// issue/consume flow; this function is the blocking form.
inline AdditiveShare beaver_matmul(const AdditiveShare& x, const AdditiveShare& y,
                                   bool transpose_b, TripleSource& triples, Communicator& comm,
                                   const std::string& tag = "matmul", int chunks = 1) {
  const int party = comm.party();
  BeaverTriple t =
      triples.fetch(TripleSpec::matmul_of(x.tensor.shape(), y.tensor.shape(), transpose_b), tag);
  t.mark_consumed();

  SendHandle hd = comm.reveal_async(sub(y.tensor, t.b), Reduce::Sum, tag + ".delta");
  std::size_t M = x.tensor.shape()[x.tensor.ndim() - 2];
  std::size_t K = x.tensor.shape()[x.tensor.ndim() - 1];
  bool batched_b = y.tensor.ndim() > 2;
  // Chunk unit: a batch slab when the rhs is batched (attention), otherwise a
  // row block of the flattened lhs.
  std::size_t rows = batched_b ? x.tensor.numel() / (M * K) : x.tensor.numel() / K;
  std::size_t row_w = batched_b ? M * K : K;
  chunks = detail::clamp_chunks(chunks, rows);

  if (chunks == 1) {
    SendHandle he = comm.reveal_async(sub(x.tensor, t.a), Reduce::Sum, tag + ".eps");
    RingTensor delta = comm.wait(hd);
    RingTensor eps = comm.wait(he);
    RingTensor z = matmul_combine(t, eps, delta, transpose_b, party);
    z.set_scale_bits(x.tensor.scale_bits());
    return AdditiveShare{party, std::move(z)};
  }

  std::vector<SendHandle> handles;
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(rows, chunks, k);
    handles.push_back(comm.reveal_async(
        sub(slice_rows(x.tensor, row_w, lo, hi), slice_rows(t.a, row_w, lo, hi)), Reduce::Sum,
        tag + ".eps.chunk" + std::to_string(k)));
  }
  RingTensor delta = comm.wait(hd);

  Shape out_shape(x.tensor.shape().begin(), x.tensor.shape().end() - 1);
  out_shape.push_back(transpose_b ? y.tensor.shape()[y.tensor.ndim() - 2]
                                  : y.tensor.shape().back());
  RingTensor z(out_shape, x.tensor.scale_bits());
  std::size_t N = out_shape.back();
  std::size_t out_row_w = batched_b ? M * N : N;

  auto slab_shape = [&](std::size_t cnt) {
    return batched_b ? Shape{cnt, M, K} : Shape{cnt, K};
  };
  for (int k = 0; k < chunks; ++k) {
    auto [lo, hi] = detail::chunk_range(rows, chunks, k);
    RingTensor eps = reshape(comm.wait(handles[static_cast<std::size_t>(k)]), slab_shape(hi - lo));
    RingTensor a_sl = reshape(slice_rows(t.a, row_w, lo, hi), slab_shape(hi - lo));
    RingTensor d_sl = batched_b ? slice_rows(delta, transpose_b ? N * K : K * N, lo, hi) : delta;
    if (batched_b)
      d_sl = reshape(d_sl, transpose_b ? Shape{hi - lo, N, K} : Shape{hi - lo, K, N});
    RingTensor b_sl = batched_b ? reshape(slice_rows(t.b, transpose_b ? N * K : K * N, lo, hi),
                                          transpose_b ? Shape{hi - lo, N, K} : Shape{hi - lo, K, N})
                                : t.b;
    RingTensor zk = add(slice_rows(t.c, out_row_w, lo, hi),
                        add(reshape(matmul(eps, b_sl, transpose_b), Shape{(hi - lo) * out_row_w}),
                            reshape(matmul(a_sl, d_sl, transpose_b), Shape{(hi - lo) * out_row_w})));
    if (party == 0)
      zk = add(zk, reshape(matmul(eps, d_sl, transpose_b), Shape{(hi - lo) * out_row_w}));
    copy_into(z, lo * out_row_w, zk);
  }
  return AdditiveShare{party, std::move(z)};
}

}  // namespace mpcpipe
