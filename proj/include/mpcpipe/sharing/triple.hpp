#pragma once

#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"

namespace mpcpipe {

enum class TripleKind : u8 { Arith = 0, Bin = 1 };
enum class TripleOp : u8 { Elementwise = 0, Matmul = 1 };

struct TripleSpec {
  TripleKind kind = TripleKind::Arith;
  TripleOp op = TripleOp::Elementwise;
  bool square = false;       // b == a, c == a*a; reveal needs only epsilon
  bool transpose_b = false;  // matmul against b's transpose
  Shape shape_a;
  Shape shape_b;

  static TripleSpec elementwise(TripleKind k, Shape shape) {
    return TripleSpec{k, TripleOp::Elementwise, false, false, shape, shape};
  }
  static TripleSpec square_of(Shape shape) {
    return TripleSpec{TripleKind::Arith, TripleOp::Elementwise, true, false, shape, shape};
  }
  static TripleSpec matmul_of(Shape a, Shape b, bool transpose_b = false) {
    return TripleSpec{TripleKind::Arith, TripleOp::Matmul, false, transpose_b, std::move(a),
                      std::move(b)};
  }

  bool operator==(const TripleSpec& o) const {
    return kind == o.kind && op == o.op && square == o.square && transpose_b == o.transpose_b &&
           shape_a == o.shape_a && shape_b == o.shape_b;
  }
};

// One party's bundle of a dealer triple: local shares of A, B and C with
// C = A*B (wrapping / matmul) or C = A&B. Consumable exactly once.
struct BeaverTriple {
  TripleSpec spec;
  int party = 0;
  RingTensor a, b, c;
  bool consumed = false;

  void mark_consumed() {
    if (consumed) throw ProtocolError("beaver triple reused after consumption");
    consumed = true;
  }
};

struct TripleSet {
  TripleSpec spec;
  std::vector<BeaverTriple> per_party;
};

namespace detail {

inline RingTensor random_tensor(const Shape& shape, CounterRng& rng) {
  RingTensor t(shape, 0);
  for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng();
  return t;
}

inline RingTensor triple_product(const TripleSpec& spec, const RingTensor& a,
                                 const RingTensor& b) {
  if (spec.op == TripleOp::Matmul) return matmul(a, b, spec.transpose_b);
  if (spec.kind == TripleKind::Bin) return bit_and(a, b);
  return mul(a, b);
}

}  // namespace detail

// Trusted-dealer triple generation: samples A, B uniformly, derives C, and
// additively (arith) or XOR (binary) shares all three.
inline TripleSet dealer_gen_triple(const TripleSpec& spec, int n, CounterRng& rng) {
  if (n < 2) throw ConfigError("dealer_gen_triple: need at least 2 parties");
  if (spec.op == TripleOp::Elementwise && spec.shape_a != spec.shape_b)
    throw ConfigError("dealer_gen_triple: elementwise shapes differ");
  if (spec.op == TripleOp::Matmul) {
    if (spec.shape_a.size() < 2 || spec.shape_b.size() < 2)
      throw ConfigError("dealer_gen_triple: matmul shapes must have rank >= 2");
    std::size_t k = spec.shape_a.back();
    std::size_t bk = spec.transpose_b ? spec.shape_b.back() : spec.shape_b[spec.shape_b.size() - 2];
    if (k != bk) throw ConfigError("dealer_gen_triple: matmul inner dims incompatible");
  }
  RingTensor A = detail::random_tensor(spec.shape_a, rng);
  RingTensor B = spec.square ? A : detail::random_tensor(spec.shape_b, rng);
  RingTensor C = detail::triple_product(spec, A, B);

  TripleSet set;
  set.spec = spec;
  set.per_party.resize(static_cast<std::size_t>(n));
  auto deal = [&](const RingTensor& v, auto assign) {
    if (spec.kind == TripleKind::Bin) {
      auto sh = share_binary(v, n, rng);
      for (int p = 0; p < n; ++p) assign(p, std::move(sh[p].tensor));
    } else {
      auto sh = share_additive(v, n, rng);
      for (int p = 0; p < n; ++p) assign(p, std::move(sh[p].tensor));
    }
  };
  deal(A, [&](int p, RingTensor t) { set.per_party[p].a = std::move(t); });
  deal(B, [&](int p, RingTensor t) { set.per_party[p].b = std::move(t); });
  deal(C, [&](int p, RingTensor t) { set.per_party[p].c = std::move(t); });
  for (int p = 0; p < n; ++p) {
    set.per_party[p].spec = spec;
    set.per_party[p].party = p;
  }
  return set;
}

// Per-party triple provider. When a fetch carries a tag, the triple is
// derived from the tag rather than the fetch position, so schedules that
// reorder ops across layers (lookahead pipelining) still consume the exact
// triples the serial schedule would. Untagged fetches fall back to position.
class TripleSource {
 public:
  virtual ~TripleSource() = default;
  virtual BeaverTriple fetch(const TripleSpec& spec, std::string_view tag = {}) = 0;
};

// Regenerates the dealer's stream locally from the session seed.
class SeededDealer : public TripleSource {
 public:
  SeededDealer(u64 seed, int party, int n_parties)
      : seed_(seed), party_(party), n_(n_parties) {}

  BeaverTriple fetch(const TripleSpec& spec, std::string_view tag = {}) override {
    u64 stream;
    if (tag.empty()) {
      stream = 0x7452u ^ index_++;
    } else {
      // fnv-1a; repeated fetches under one tag advance a per-tag counter
      u64 h = 0xcbf29ce484222325ull;
      for (char c : tag) h = (h ^ u64(static_cast<unsigned char>(c))) * 0x100000001b3ull;
      stream = CounterRng::mix(h + 0x51ed270b * tag_counts_[h]++);
    }
    CounterRng rng(seed_, stream);
    TripleSet set = dealer_gen_triple(spec, n_, rng);
    return std::move(set.per_party[static_cast<std::size_t>(party_)]);
  }

 private:
  u64 seed_;
  int party_;
  int n_;
  u64 index_ = 0;
  std::unordered_map<u64, u64> tag_counts_;
};

// Pre-loaded queue (offline phase replay). Fetch order must match the stored
// order; specs are checked, tags are irrelevant.
class QueueTripleSource : public TripleSource {
 public:
  explicit QueueTripleSource(std::vector<BeaverTriple> triples)
      : triples_(std::move(triples)) {}

  BeaverTriple fetch(const TripleSpec& spec, std::string_view = {}) override {
    if (next_ >= triples_.size()) throw ProtocolError("triple queue exhausted");
    BeaverTriple t = std::move(triples_[next_++]);
    if (!(t.spec == spec)) throw ProtocolError("triple queue spec mismatch at record " +
                                               std::to_string(next_ - 1));
    return t;
  }

 private:
  std::vector<BeaverTriple> triples_;
  std::size_t next_ = 0;
};

// ---- Triple-queue file format -----------------------------------------
// Length-prefixed binary records, little-endian throughout:
//   u64 record_len (bytes after this field)
//   u8 kind, u8 op, u8 square, u8 transpose_b, u8 n_parties
//   u8 ndim_a, u64 dims_a[...], u8 ndim_b, u64 dims_b[...]
//   per party p in 0..n-1: u64 a[numel_a], u64 b[numel_b], u64 c[numel_c]

namespace detail {

inline void put_u64(std::string& buf, u64 v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline u64 get_u64(const unsigned char* p) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(p[i]) << (8 * i);
  return v;
}

inline void put_tensor(std::string& buf, const RingTensor& t) {
  for (std::size_t i = 0; i < t.numel(); ++i) put_u64(buf, t.at(i));
}

}  // namespace detail

inline void save_triples(const std::string& path, const std::vector<TripleSet>& sets) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw TransportError("save_triples: cannot open " + path);
  for (const auto& set : sets) {
    std::string body;
    body.push_back(static_cast<char>(set.spec.kind));
    body.push_back(static_cast<char>(set.spec.op));
    body.push_back(set.spec.square ? 1 : 0);
    body.push_back(set.spec.transpose_b ? 1 : 0);
    body.push_back(static_cast<char>(set.per_party.size()));
    body.push_back(static_cast<char>(set.spec.shape_a.size()));
    for (auto d : set.spec.shape_a) detail::put_u64(body, d);
    body.push_back(static_cast<char>(set.spec.shape_b.size()));
    for (auto d : set.spec.shape_b) detail::put_u64(body, d);
    for (const auto& bt : set.per_party) {
      detail::put_tensor(body, bt.a);
      detail::put_tensor(body, bt.b);
      detail::put_tensor(body, bt.c);
    }
    std::string head;
    detail::put_u64(head, body.size());
    std::fwrite(head.data(), 1, head.size(), f);
    std::fwrite(body.data(), 1, body.size(), f);
  }
  std::fclose(f);
}

inline std::vector<TripleSet> load_triples(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw TransportError("load_triples: cannot open " + path);
  std::vector<TripleSet> out;
  for (;;) {
    unsigned char head[8];
    std::size_t got = std::fread(head, 1, 8, f);
    if (got == 0) break;
    if (got != 8) {
      std::fclose(f);
      throw TransportError("load_triples: truncated record header");
    }
    u64 len = detail::get_u64(head);
    std::vector<unsigned char> body(len);
    if (std::fread(body.data(), 1, len, f) != len) {
      std::fclose(f);
      throw TransportError("load_triples: truncated record body");
    }
    std::size_t off = 0;
    auto need = [&](std::size_t n) {
      if (off + n > body.size()) throw TransportError("load_triples: malformed record");
    };
    need(6);
    TripleSpec spec;
    spec.kind = static_cast<TripleKind>(body[off++]);
    spec.op = static_cast<TripleOp>(body[off++]);
    spec.square = body[off++] != 0;
    spec.transpose_b = body[off++] != 0;
    int n = body[off++];
    int nda = body[off++];
    for (int i = 0; i < nda; ++i) {
      need(8);
      spec.shape_a.push_back(detail::get_u64(body.data() + off));
      off += 8;
    }
    need(1);
    int ndb = body[off++];
    for (int i = 0; i < ndb; ++i) {
      need(8);
      spec.shape_b.push_back(detail::get_u64(body.data() + off));
      off += 8;
    }
    Shape shape_c;
    if (spec.op == TripleOp::Matmul) {
      shape_c.assign(spec.shape_a.begin(), spec.shape_a.end() - 1);
      shape_c.push_back(spec.transpose_b ? spec.shape_b[spec.shape_b.size() - 2]
                                         : spec.shape_b.back());
    } else {
      shape_c = spec.shape_a;
    }
    auto read_tensor = [&](const Shape& s) {
      RingTensor t(s, 0);
      need(8 * t.numel());
      for (std::size_t i = 0; i < t.numel(); ++i) {
        t.at(i) = detail::get_u64(body.data() + off);
        off += 8;
      }
      return t;
    };
    TripleSet set;
    set.spec = spec;
    for (int p = 0; p < n; ++p) {
      BeaverTriple bt;
      bt.spec = spec;
      bt.party = p;
      bt.a = read_tensor(spec.shape_a);
      bt.b = read_tensor(spec.shape_b);
      bt.c = read_tensor(shape_c);
      set.per_party.push_back(std::move(bt));
    }
    out.push_back(std::move(set));
  }
  std::fclose(f);
  return out;
}

}  // namespace mpcpipe
