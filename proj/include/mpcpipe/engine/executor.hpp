#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcpipe/engine/model.hpp"
#include "mpcpipe/nonlinear/activations.hpp"
#include "mpcpipe/protocols/beaver.hpp"
#include "mpcpipe/protocols/context.hpp"
#include "mpcpipe/protocols/trunc.hpp"

namespace mpcpipe {

// Blocking runs every reveal at its point of use. Pipelined adds two overlaps:
// the weight-side opening of each linear layer (delta = W - B) is issued as
// soon as the previous linear layer's input opening is on the wire, so it
// travels during the nonlinear layers in between; and large data-dependent
// collectives are split into chunks so transfer overlaps combine compute.
enum class ExecMode { Blocking, Pipelined };

inline const char* exec_mode_name(ExecMode m) {
  return m == ExecMode::Pipelined ? "pipelined" : "blocking";
}

struct ExecOptions {
  ExecMode mode = ExecMode::Blocking;
  int chunks = 4;  // pipelined: chunk count for large collectives
  // Operands smaller than this stay unchunked. The shipped default suits a
  // fast LAN; for other network profiles calibrate_threshold measures where
  // chunking starts to pay off and will usually land much lower.
  std::size_t chunk_threshold = std::size_t(2) << 20;
  bool merged_adder = true;
};

// A party's view of the model parameters: either its additive share of every
// tensor, or the plaintext itself. With public weights the linear layers
// multiply shares against known matrices locally -- no triples, no openings.
struct WeightSet {
  bool is_public = false;
  std::map<std::string, RingTensor> values;  // encoded at frac_bits
};

// Every party expands the same seeded sharing and keeps its own piece, which
// stands in for a weight-owner dealing shares ahead of time. Biases live at
// frac_bits; products are truncated back to frac_bits before bias addition.
inline WeightSet deal_weight_shares(const ModelGraph& g, const WeightMap& w, int n, int party,
                                    u64 seed) {
  check_weights(g, w);
  WeightSet out;
  CounterRng rng(seed, 0x3e1f);
  for (const auto& [key, t] : w) {
    RingTensor enc = encode_tensor(t.v, t.shape, g.frac_bits);
    out.values.emplace(key, share_additive(enc, n, rng)[static_cast<std::size_t>(party)].tensor);
  }
  return out;
}

inline WeightSet public_weight_set(const ModelGraph& g, const WeightMap& w) {
  check_weights(g, w);
  WeightSet out;
  out.is_public = true;
  for (const auto& [key, t] : w)
    out.values.emplace(key, encode_tensor(t.v, t.shape, g.frac_bits));
  return out;
}

inline AdditiveShare deal_input_share(const DoubleTensor& x, int frac_bits, int n, int party,
                                      u64 seed) {
  CounterRng rng(seed, 0x11a9);
  RingTensor enc = encode_tensor(x.v, x.shape, frac_bits);
  return share_additive(enc, n, rng)[static_cast<std::size_t>(party)];
}

namespace engdetail {

// im2col over shares: linear gather, zero padding taps. Row = (n, oh, ow),
// col = (ci, ki, kj) -- must match the reference executor and the conv weight
// layout [C_in*k*k, C_out].
inline RingTensor im2col(const RingTensor& x, std::size_t k, std::size_t stride,
                         std::size_t pad) {
  const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const std::size_t OH = (H + 2 * pad - k) / stride + 1;
  const std::size_t OW = (W + 2 * pad - k) / stride + 1;
  RingTensor cols(Shape{N * OH * OW, C * k * k}, x.scale_bits());
  auto src = x.data();
  auto dst = cols.data();
  std::size_t r = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow, ++r) {
        std::size_t c = 0;
        for (std::size_t ci = 0; ci < C; ++ci)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj, ++c) {
              const std::size_t ih = oh * stride + ki;
              const std::size_t iw = ow * stride + kj;
              if (ih < pad || iw < pad) continue;
              const std::size_t sh = ih - pad, sw = iw - pad;
              if (sh >= H || sw >= W) continue;
              dst[r * C * k * k + c] = src[((n * C + ci) * H + sh) * W + sw];
            }
      }
  meter::charge(cols.numel());
  return cols;
}

inline RingTensor col2im(const RingTensor& y, std::size_t N, std::size_t Cout, std::size_t OH,
                         std::size_t OW) {
  RingTensor out(Shape{N, Cout, OH, OW}, y.scale_bits());
  auto src = y.data();
  auto dst = out.data();
  std::size_t r = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow, ++r)
        for (std::size_t co = 0; co < Cout; ++co)
          dst[((n * Cout + co) * OH + oh) * OW + ow] = src[r * Cout + co];
  meter::charge(out.numel());
  return out;
}

// Add a [out]-shaped bias share to every row of a [rows, out] share.
inline RingTensor add_bias_rows(const RingTensor& x, const RingTensor& bias) {
  const std::size_t out = bias.numel();
  const std::size_t rows = x.numel() / out;
  RingTensor y = x;
  auto d = y.data();
  auto b = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out; ++o) d[r * out + o] = radd(d[r * out + o], b[o]);
  meter::charge(x.numel());
  return y;
}

// Split [B*T, 3d] packed projections into one [B*heads, T, dh] tensor per
// part (0 = queries, 1 = keys, 2 = values).
inline RingTensor split_heads(const RingTensor& qkv, std::size_t B, std::size_t T, std::size_t d,
                              std::size_t heads, std::size_t part) {
  const std::size_t dh = d / heads;
  RingTensor out(Shape{B * heads, T, dh}, qkv.scale_bits());
  auto src = qkv.data();
  auto dst = out.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < dh; ++j)
          dst[((b * heads + h) * T + t) * dh + j] =
              src[(b * T + t) * 3 * d + part * d + h * dh + j];
  meter::charge(out.numel());
  return out;
}

inline RingTensor merge_heads(const RingTensor& x, std::size_t B, std::size_t T, std::size_t d,
                              std::size_t heads) {
  const std::size_t dh = d / heads;
  RingTensor out(Shape{B * T, d}, x.scale_bits());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < dh; ++j)
          dst[(b * T + t) * d + h * dh + j] = src[((b * heads + h) * T + t) * dh + j];
  meter::charge(out.numel());
  return out;
}

}  // namespace engdetail

class SecureExecutor {
 public:
  SecureExecutor(const ModelGraph& graph, WeightSet weights, TripleSource& triples,
                 Communicator& comm, CounterRng& rng, ExecOptions opt)
      : g_(graph),
        shapes_(infer_shapes(graph)),
        weights_(std::move(weights)),
        opt_(opt),
        ctx_{triples, comm, rng, graph.frac_bits} {
    ctx_.adder.merged = opt_.merged_adder;
    if (opt_.mode == ExecMode::Pipelined) {
      ctx_.chunks = opt_.chunks;
      ctx_.chunk_threshold = opt_.chunk_threshold;
      ctx_.adder.chunks = 1;  // adder levels chunk per-op via adder_for
    }
    build_weight_ops();
  }

  // One inference pass: [input share] -> [logits share]. Multiple calls reuse
  // the executor; each pass draws fresh triples under the same tags.
  AdditiveShare run(const AdditiveShare& input) {
    if (input.tensor.shape() != g_.input) throw ConfigError("run: input shape mismatch");
    if (opt_.mode == ExecMode::Pipelined && !weights_.is_public && !wops_.empty() &&
        !wops_[0].triple)
      prepare(0);
    AdditiveShare cur = input;
    Shape cur_shape = g_.input;
    for (std::size_t i = 0; i < g_.layers.size(); ++i) {
      cur = run_layer(g_.layers[i], cur, cur_shape);
      cur_shape = shapes_[i];
    }
    return cur;
  }

  // Tags of the weight-side linear openings, for wait-time attribution.
  std::vector<std::string> linear_tags() const {
    std::vector<std::string> tags;
    tags.reserve(wops_.size());
    for (const WeightOp& op : wops_) tags.push_back(op.tag);
    return tags;
  }

  // The model's first linear opening has no predecessor to hide its delta
  // under (first-iteration prologue issues it synchronously just before use),
  // so its wait is reported apart from the hideable ones.
  std::string first_linear_tag() const { return wops_.empty() ? std::string() : wops_[0].tag; }

 private:
  struct WeightOp {
    std::string tag;   // collectives appear as "<tag>.delta" / "<tag>.eps"
    std::string wkey;  // weight tensor key
    std::string bkey;  // bias key, empty if none
    Shape x_shape;     // the 2-d activation shape this op consumes
    TripleSpec spec;
    std::optional<BeaverTriple> triple;
    std::optional<SendHandle> delta_h;
  };

  void add_weight_op(const std::string& tag, const std::string& wkey, const std::string& bkey,
                     Shape x_shape) {
    const RingTensor& w = weights_.values.at(wkey);
    WeightOp op;
    op.tag = tag;
    op.wkey = wkey;
    op.bkey = bkey;
    op.spec = TripleSpec::matmul_of(x_shape, w.shape());
    op.x_shape = std::move(x_shape);
    wop_index_.emplace(op.tag, wops_.size());
    wops_.push_back(std::move(op));
  }

  void build_weight_ops() {
    Shape cur = g_.input;
    for (std::size_t i = 0; i < g_.layers.size(); ++i) {
      const LayerSpec& l = g_.layers[i];
      switch (l.kind) {
        case LayerKind::Dense: {
          const std::size_t in = cur.back();
          add_weight_op(l.name + ".mm", l.name + ".W", l.bias ? l.name + ".b" : "",
                        Shape{shape_numel(cur) / in, in});
          break;
        }
        case LayerKind::Conv2d: {
          const std::size_t rows = cur[0] * ((cur[2] + 2 * l.pad - l.kernel) / l.stride + 1) *
                                   ((cur[3] + 2 * l.pad - l.kernel) / l.stride + 1);
          add_weight_op(l.name + ".mm", l.name + ".W", l.bias ? l.name + ".b" : "",
                        Shape{rows, cur[1] * l.kernel * l.kernel});
          break;
        }
        case LayerKind::Attention: {
          const Shape x2{cur[0] * cur[1], cur[2]};
          add_weight_op(l.name + ".qkv", l.name + ".Wqkv", l.bias ? l.name + ".bqkv" : "", x2);
          add_weight_op(l.name + ".proj", l.name + ".Wo", l.bias ? l.name + ".bo" : "", x2);
          break;
        }
        default:
          break;
      }
      cur = shapes_[i];
    }
  }

  // Fetch the op's triple and put its weight-side opening on the wire. In
  // pipelined mode this happens one linear layer ahead, so the delta transfer
  // rides under everything between the two layers; the values fetched are
  // independent of when this runs because triples are keyed by tag.
  void prepare(std::size_t i) {
    WeightOp& op = wops_[i];
    BeaverTriple t = ctx_.triples.fetch(op.spec, op.tag);
    t.mark_consumed();
    op.delta_h = ctx_.comm.reveal_async(sub(weights_.values.at(op.wkey), t.b), Reduce::Sum,
                                        op.tag + ".delta");
    op.triple = std::move(t);
  }

  // z = x2d . W with the weight opening possibly already in flight. Issues the
  // activation-side opening, then (pipelined) prepares the next op before
  // waiting, so the next delta leaves while this epsilon is still traveling.
  // Public weights shortcut all of it: the product is local.
  AdditiveShare weight_matmul(std::size_t i, const RingTensor& x2d) {
    WeightOp& op = wops_[i];
    if (weights_.is_public) {
      RingTensor z = matmul(x2d, weights_.values.at(op.wkey));
      z.set_scale_bits(2 * g_.frac_bits);
      return {ctx_.comm.party(), std::move(z)};
    }
    if (!op.triple) prepare(i);
    BeaverTriple t = std::move(*op.triple);
    SendHandle delta_h = std::move(*op.delta_h);
    op.triple.reset();
    op.delta_h.reset();

    SendHandle eps_h = ctx_.comm.reveal_async(sub(x2d, t.a), Reduce::Sum, op.tag + ".eps");
    if (opt_.mode == ExecMode::Pipelined && wops_.size() > 1) {
      const std::size_t next = (i + 1) % wops_.size();
      if (!wops_[next].triple) prepare(next);
    }
    RingTensor delta = ctx_.comm.wait(delta_h);
    RingTensor eps = ctx_.comm.wait(eps_h);
    RingTensor z = matmul_combine(t, eps, delta, false, ctx_.comm.party());
    z.set_scale_bits(2 * g_.frac_bits);
    return {ctx_.comm.party(), std::move(z)};
  }

  // Product at 2f -> truncate to f -> add bias (already at f). A public bias
  // is a public constant, so only party 0 absorbs it.
  AdditiveShare finish_linear(AdditiveShare z, const std::string& bkey) {
    z = truncate_shares(z, g_.frac_bits, ctx_.comm, ctx_.rng);
    if (!bkey.empty() && (!weights_.is_public || ctx_.comm.party() == 0))
      z.tensor = engdetail::add_bias_rows(z.tensor, weights_.values.at(bkey));
    return z;
  }

  AdditiveShare scale_and_rescale(const AdditiveShare& x, double c) {
    AdditiveShare y = scale_public(x, ctx_.encode(c));
    y.tensor.set_scale_bits(2 * g_.frac_bits);
    return truncate_shares(y, g_.frac_bits, ctx_.comm, ctx_.rng);
  }

  AdditiveShare attention(const LayerSpec& l, const AdditiveShare& x, const Shape& in_shape) {
    const std::size_t B = in_shape[0], T = in_shape[1], d = in_shape[2];
    const std::size_t heads = l.heads, dh = d / heads;
    const std::size_t qkv_op = wop_index_.at(l.name + ".qkv");
    const std::size_t proj_op = wop_index_.at(l.name + ".proj");

    RingTensor x2 = reshape(x.tensor, Shape{B * T, d});
    AdditiveShare qkv = finish_linear(weight_matmul(qkv_op, x2), wops_[qkv_op].bkey);

    AdditiveShare q{x.party, engdetail::split_heads(qkv.tensor, B, T, d, heads, 0)};
    AdditiveShare k{x.party, engdetail::split_heads(qkv.tensor, B, T, d, heads, 1)};
    AdditiveShare v{x.party, engdetail::split_heads(qkv.tensor, B, T, d, heads, 2)};

    // scores = QK^T / sqrt(dh): activation x activation, so no weight-side
    // pre-transmission -- chunking is the only overlap available here.
    AdditiveShare scores = beaver_matmul(q, k, true, ctx_.triples, ctx_.comm, l.name + ".qk",
                                         ctx_.chunks_for(B * heads * T * T));
    scores = truncate_shares(scores, g_.frac_bits, ctx_.comm, ctx_.rng);
    scores = scale_and_rescale(scores, 1.0 / std::sqrt(static_cast<double>(dh)));

    AdditiveShare probs = softmax_shares(scores, T, ctx_, l.name + ".softmax");

    AdditiveShare mixed = beaver_matmul(probs, v, false, ctx_.triples, ctx_.comm, l.name + ".av",
                                        ctx_.chunks_for(B * heads * T * dh));
    mixed = truncate_shares(mixed, g_.frac_bits, ctx_.comm, ctx_.rng);

    RingTensor merged = engdetail::merge_heads(mixed.tensor, B, T, d, heads);
    AdditiveShare out = finish_linear(weight_matmul(proj_op, merged), wops_[proj_op].bkey);
    out.tensor = reshape(out.tensor, Shape{B, T, d});
    return out;
  }

  AdditiveShare run_layer(const LayerSpec& l, const AdditiveShare& x, const Shape& in_shape) {
    switch (l.kind) {
      case LayerKind::Dense: {
        const std::size_t op = wop_index_.at(l.name + ".mm");
        RingTensor x2 = reshape(x.tensor, wops_[op].x_shape);
        AdditiveShare z = finish_linear(weight_matmul(op, x2), wops_[op].bkey);
        Shape out_shape = in_shape;
        out_shape.back() = l.out;
        z.tensor = reshape(z.tensor, out_shape);
        return z;
      }
      case LayerKind::Conv2d: {
        const std::size_t N = in_shape[0], H = in_shape[2], W = in_shape[3];
        const std::size_t OH = (H + 2 * l.pad - l.kernel) / l.stride + 1;
        const std::size_t OW = (W + 2 * l.pad - l.kernel) / l.stride + 1;
        const std::size_t op = wop_index_.at(l.name + ".mm");
        RingTensor cols = engdetail::im2col(x.tensor, l.kernel, l.stride, l.pad);
        AdditiveShare z = finish_linear(weight_matmul(op, cols), wops_[op].bkey);
        z.tensor = engdetail::col2im(z.tensor, N, l.out, OH, OW);
        return z;
      }
      case LayerKind::Relu:
        return relu_shares(x, ctx_, l.name);
      case LayerKind::Maxpool2d:
        return maxpool2d_shares(x, in_shape[0], in_shape[1], in_shape[2], in_shape[3], l.kernel,
                                l.stride, ctx_, l.name);
      case LayerKind::Flatten: {
        std::size_t rest = 1;
        for (std::size_t i = 1; i < in_shape.size(); ++i) rest *= in_shape[i];
        return {x.party, reshape(x.tensor, Shape{in_shape[0], rest})};
      }
      case LayerKind::Attention:
        return attention(l, x, in_shape);
      case LayerKind::Softmax:
        return softmax_shares(x, in_shape.back(), ctx_, l.name);
      case LayerKind::MeanPool: {
        const std::size_t B = in_shape[0], T = in_shape[1], d = in_shape[2];
        RingTensor sum(Shape{B, d}, x.tensor.scale_bits());
        auto src = x.tensor.data();
        auto dst = sum.data();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < d; ++j)
              dst[b * d + j] = radd(dst[b * d + j], src[(b * T + t) * d + j]);
        meter::charge(x.tensor.numel());
        return scale_and_rescale({x.party, std::move(sum)}, 1.0 / static_cast<double>(T));
      }
    }
    throw ProtocolError("unhandled layer kind");
  }

  ModelGraph g_;
  std::vector<Shape> shapes_;
  WeightSet weights_;
  ExecOptions opt_;
  ProtoCtx ctx_;
  std::vector<WeightOp> wops_;
  std::map<std::string, std::size_t> wop_index_;
};

}  // namespace mpcpipe
