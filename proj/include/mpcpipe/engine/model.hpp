#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/sharing/rng.hpp"

namespace mpcpipe {

// Models are linear chains of layers over a fixed input shape. Shapes are
// static, so every linear layer's operand dimensions (and hence its triple
// spec) are known before inference starts.
enum class LayerKind { Dense, Conv2d, Relu, Maxpool2d, Flatten, Attention, Softmax, MeanPool };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Dense;
  std::size_t out = 0;     // dense: output features; conv: output channels
  std::size_t kernel = 0;  // conv / maxpool window
  std::size_t stride = 1;
  std::size_t pad = 0;     // conv only; maxpool never pads
  std::size_t heads = 0;   // attention
  bool bias = true;
};

struct ModelGraph {
  std::string name;
  int frac_bits = 20;
  Shape input;  // leading dim is the batch
  std::vector<LayerSpec> layers;
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Maxpool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Attention: return "attention";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::MeanPool: return "mean_pool";
  }
  return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "relu") return LayerKind::Relu;
  if (s == "maxpool2d") return LayerKind::Maxpool2d;
  if (s == "flatten") return LayerKind::Flatten;
  if (s == "attention") return LayerKind::Attention;
  if (s == "softmax") return LayerKind::Softmax;
  if (s == "mean_pool") return LayerKind::MeanPool;
  throw ConfigError("unknown layer type: " + s);
}

// Output shape of every layer in order. Throws on rank/divisibility errors so
// bad configs die before any communication happens.
inline std::vector<Shape> infer_shapes(const ModelGraph& g) {
  std::vector<Shape> out;
  out.reserve(g.layers.size());
  Shape cur = g.input;
  for (const LayerSpec& l : g.layers) {
    switch (l.kind) {
      case LayerKind::Dense: {
        if (cur.empty()) throw ConfigError(l.name + ": dense needs a trailing feature dim");
        cur.back() = l.out;
        break;
      }
      case LayerKind::Conv2d: {
        if (cur.size() != 4) throw ConfigError(l.name + ": conv2d expects NCHW input");
        const std::size_t h = cur[2], w = cur[3];
        if (h + 2 * l.pad < l.kernel || w + 2 * l.pad < l.kernel)
          throw ConfigError(l.name + ": kernel larger than padded input");
        cur = {cur[0], l.out, (h + 2 * l.pad - l.kernel) / l.stride + 1,
               (w + 2 * l.pad - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::Maxpool2d: {
        if (cur.size() != 4) throw ConfigError(l.name + ": maxpool2d expects NCHW input");
        if (cur[2] < l.kernel || cur[3] < l.kernel)
          throw ConfigError(l.name + ": pool window larger than input");
        cur = {cur[0], cur[1], (cur[2] - l.kernel) / l.stride + 1,
               (cur[3] - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::Flatten: {
        if (cur.empty()) throw ConfigError(l.name + ": flatten on scalar");
        std::size_t rest = 1;
        for (std::size_t i = 1; i < cur.size(); ++i) rest *= cur[i];
        cur = {cur[0], rest};
        break;
      }
      case LayerKind::Attention: {
        if (cur.size() != 3) throw ConfigError(l.name + ": attention expects [B, T, d]");
        if (l.heads == 0 || cur[2] % l.heads != 0)
          throw ConfigError(l.name + ": head count must divide the model dim");
        break;  // shape-preserving
      }
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;  // shape-preserving
      case LayerKind::MeanPool: {
        if (cur.size() != 3) throw ConfigError(l.name + ": mean_pool expects [B, T, d]");
        cur = {cur[0], cur[2]};
        break;
      }
    }
    out.push_back(cur);
  }
  return out;
}

inline nlohmann::json model_to_json(const ModelGraph& g) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : g.layers) {
    nlohmann::json j{{"name", l.name}, {"type", layer_kind_name(l.kind)}};
    switch (l.kind) {
      case LayerKind::Dense:
        j["out"] = l.out;
        j["bias"] = l.bias;
        break;
      case LayerKind::Conv2d:
        j["out"] = l.out;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["pad"] = l.pad;
        j["bias"] = l.bias;
        break;
      case LayerKind::Maxpool2d:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        break;
      case LayerKind::Attention:
        j["heads"] = l.heads;
        j["bias"] = l.bias;
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  return nlohmann::json{{"name", g.name},
                        {"frac_bits", g.frac_bits},
                        {"input", g.input},
                        {"layers", std::move(layers)}};
}

inline ModelGraph model_from_json(const nlohmann::json& j) {
  ModelGraph g;
  g.name = j.value("name", std::string("model"));
  g.frac_bits = j.value("frac_bits", 20);
  if (g.frac_bits < 1 || g.frac_bits > 40) throw ConfigError("frac_bits out of range");
  g.input = j.at("input").get<Shape>();
  for (const nlohmann::json& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_name(lj.at("type").get<std::string>());
    l.name = lj.value("name", std::string(layer_kind_name(l.kind)));
    l.out = lj.value("out", std::size_t{0});
    l.kernel = lj.value("kernel", std::size_t{0});
    l.stride = lj.value("stride", std::size_t{1});
    l.pad = lj.value("pad", std::size_t{0});
    l.heads = lj.value("heads", std::size_t{0});
    l.bias = lj.value("bias", true);
    g.layers.push_back(std::move(l));
  }
  infer_shapes(g);  // validate
  return g;
}

inline ModelGraph load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("bad model json: " + std::string(e.what()));
  }
  return model_from_json(j);
}

inline void save_model(const ModelGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model config: " + path);
  out << model_to_json(g).dump(2) << "\n";
}

// ---- weights -------------------------------------------------------------

struct DoubleTensor {
  Shape shape;
  std::vector<double> v;
};

// Sorted so that iteration (and thus any seeded per-tensor derivation) is
// deterministic across parties and runs.
using WeightMap = std::map<std::string, DoubleTensor>;

// Weight tensors a layer owns, in matmul layout: dense W is [in, out], conv W
// is [C_in*k*k, out] (rows match the column gather below), attention packs
// Q|K|V projections into one [d, 3d] matrix plus the output projection.
inline std::vector<std::pair<std::string, Shape>> layer_weight_shapes(const LayerSpec& l,
                                                                      const Shape& in_shape) {
  std::vector<std::pair<std::string, Shape>> out;
  switch (l.kind) {
    case LayerKind::Dense: {
      const std::size_t fan_in = in_shape.back();
      out.push_back({l.name + ".W", Shape{fan_in, l.out}});
      if (l.bias) out.push_back({l.name + ".b", Shape{l.out}});
      break;
    }
    case LayerKind::Conv2d: {
      const std::size_t fan_in = in_shape[1] * l.kernel * l.kernel;
      out.push_back({l.name + ".W", Shape{fan_in, l.out}});
      if (l.bias) out.push_back({l.name + ".b", Shape{l.out}});
      break;
    }
    case LayerKind::Attention: {
      const std::size_t d = in_shape[2];
      out.push_back({l.name + ".Wqkv", Shape{d, 3 * d}});
      if (l.bias) out.push_back({l.name + ".bqkv", Shape{3 * d}});
      out.push_back({l.name + ".Wo", Shape{d, d}});
      if (l.bias) out.push_back({l.name + ".bo", Shape{d}});
      break;
    }
    default:
      break;
  }
  return out;
}

inline std::vector<std::pair<std::string, Shape>> model_weight_shapes(const ModelGraph& g) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::vector<Shape> shapes = infer_shapes(g);
  Shape cur = g.input;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    for (auto& p : layer_weight_shapes(g.layers[i], cur)) out.push_back(std::move(p));
    cur = shapes[i];
  }
  return out;
}

// Deterministic init: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for
// matrices, [-0.1, 0.1] for biases. One counter stream per tensor keyed by
// its position so adding a layer doesn't reshuffle everything before it.
inline WeightMap init_weights(const ModelGraph& g, u64 seed) {
  WeightMap w;
  std::size_t idx = 0;
  for (const auto& [key, shape] : model_weight_shapes(g)) {
    CounterRng rng(seed, 0x77e1 + idx++);
    DoubleTensor t;
    t.shape = shape;
    const std::size_t n = shape_numel(shape);
    t.v.resize(n);
    const double span =
        shape.size() >= 2 ? 1.0 / std::sqrt(static_cast<double>(shape[0])) : 0.1;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
      t.v[i] = (2.0 * u - 1.0) * span;
    }
    w.emplace(key, std::move(t));
  }
  return w;
}

// Binary weights file: magic, version, entry count, then per entry a
// length-prefixed name, rank, dims, and raw little-endian doubles.
namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("weights file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("weights file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}
}  // namespace detail

inline void save_weights(const WeightMap& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write weights: " + path);
  os.write("MPCW", 4);
  detail::put_u32(os, 1);  // version
  detail::put_u32(os, static_cast<std::uint32_t>(w.size()));
  for (const auto& [name, t] : w) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) detail::put_u64(os, d);
    for (double x : t.v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      detail::put_u64(os, bits);
    }
  }
  if (!os) throw ConfigError("write failed: " + path);
}

inline WeightMap load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open weights: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "MPCW")
    throw ConfigError("not a weights file: " + path);
  if (detail::get_u32(is) != 1) throw ConfigError("unsupported weights version");
  const std::uint32_t count = detail::get_u32(is);
  WeightMap w;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = detail::get_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw ConfigError("weights file truncated");
    const std::uint32_t rank = detail::get_u32(is);
    DoubleTensor t;
    t.shape.resize(rank);
    for (std::uint32_t i = 0; i < rank; ++i) t.shape[i] = detail::get_u64(is);
    t.v.resize(shape_numel(t.shape));
    for (double& x : t.v) {
      const std::uint64_t bits = detail::get_u64(is);
      std::memcpy(&x, &bits, 8);
    }
    w.emplace(std::move(name), std::move(t));
  }
  return w;
}

// Weights must cover exactly the tensors the graph declares, with the right
// shapes; extra or missing entries are config errors.
inline void check_weights(const ModelGraph& g, const WeightMap& w) {
  const auto expected = model_weight_shapes(g);
  if (expected.size() != w.size())
    throw ConfigError("weights entry count mismatch for model " + g.name);
  for (const auto& [key, shape] : expected) {
    auto it = w.find(key);
    if (it == w.end()) throw ConfigError("missing weight tensor: " + key);
    if (it->second.shape != shape) throw ConfigError("wrong shape for weight tensor: " + key);
  }
}

// ---- toy zoo ---------------------------------------------------------------

inline ModelGraph toy_transformer(std::size_t batch = 4, std::size_t seq = 32,
                                  std::size_t dim = 64, std::size_t heads = 4,
                                  std::size_t ffn = 256, std::size_t classes = 10) {
  ModelGraph g;
  g.name = "toy_transformer";
  g.frac_bits = 20;
  g.input = {batch, seq, dim};
  g.layers = {
      {"attn0", LayerKind::Attention, 0, 0, 1, 0, heads, true},
      {"ffn_up", LayerKind::Dense, ffn, 0, 1, 0, 0, true},
      {"act0", LayerKind::Relu},
      {"ffn_down", LayerKind::Dense, dim, 0, 1, 0, 0, true},
      {"pool", LayerKind::MeanPool},
      {"head", LayerKind::Dense, classes, 0, 1, 0, 0, true},
  };
  return g;
}

inline ModelGraph toy_cnn(std::size_t batch = 1, std::size_t channels = 3, std::size_t side = 32,
                          std::size_t classes = 10) {
  ModelGraph g;
  g.name = "toy_cnn";
  g.frac_bits = 20;
  g.input = {batch, channels, side, side};
  g.layers = {
      {"conv0", LayerKind::Conv2d, 8, 3, 1, 1, 0, true},
      {"act0", LayerKind::Relu},
      {"conv1", LayerKind::Conv2d, 8, 3, 1, 1, 0, true},
      {"act1", LayerKind::Relu},
      {"pool0", LayerKind::Maxpool2d, 0, 2, 2, 0, 0, true},
      {"conv2", LayerKind::Conv2d, 16, 3, 1, 1, 0, true},
      {"act2", LayerKind::Relu},
      {"conv3", LayerKind::Conv2d, 16, 3, 1, 1, 0, true},
      {"act3", LayerKind::Relu},
      {"pool1", LayerKind::Maxpool2d, 0, 2, 2, 0, 0, true},
      {"flat", LayerKind::Flatten},
      {"head", LayerKind::Dense, classes, 0, 1, 0, 0, true},
  };
  return g;
}

inline ModelGraph builtin_model(const std::string& name) {
  if (name == "toy_transformer") return toy_transformer();
  if (name == "toy_cnn") return toy_cnn();
  throw ConfigError("unknown builtin model: " + name +
                    " (expected toy_transformer or toy_cnn, or pass a json path)");
}

// Deterministic demo input in [-1, 1), shaped like the model's input.
inline DoubleTensor demo_input(const ModelGraph& g, u64 seed) {
  DoubleTensor t;
  t.shape = g.input;
  t.v.resize(shape_numel(g.input));
  CounterRng rng(seed, 0x1d07);
  for (double& x : t.v) x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  return t;
}

}  // namespace mpcpipe
