#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpcpipe/transport/config.hpp"
#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

// FNV-1a over the little-endian bytes of the ring words. Used to compare
// outputs across modes/backends without shipping whole tensors around.
inline u64 fnv1a_words(std::span<const u64> words) {
  u64 h = 0xcbf29ce484222325ull;
  for (u64 w : words)
    for (int i = 0; i < 8; ++i) h = (h ^ ((w >> (8 * i)) & 0xff)) * 0x100000001b3ull;
  return h;
}

inline bool tag_has_suffix(const std::string& tag, const char* suffix) {
  const std::size_t n = std::string(suffix).size();
  return tag.size() >= n && tag.compare(tag.size() - n, n, suffix) == 0;
}

inline bool tag_belongs_to(const std::string& tag, const std::vector<std::string>& prefixes) {
  for (const std::string& t : prefixes)
    if (tag.size() > t.size() && tag.compare(0, t.size(), t) == 0 && tag[t.size()] == '.')
      return true;
  return false;
}

// Wall-clock wait attributable to weight-metadata openings in the linear
// layers: how long combines actually stalled for a (w - b) reveal. The
// activation-side matmuls inside attention also open a delta, but that one
// is input-dependent and cannot be pre-transmitted, so it is not counted.
// Pipelining exists to drive this number to zero.
inline double delta_wait_seconds(const std::vector<TraceEvent>& trace,
                                 const std::vector<std::string>& linear_tags) {
  double s = 0;
  for (const TraceEvent& e : trace)
    if (tag_has_suffix(e.tag, ".delta") && tag_belongs_to(e.tag, linear_tags)) s += e.stall();
  return s;
}

// Sender-side serialization time of the linear layers' collectives (both
// openings, chunked or not). The yardstick delta-wait is judged against.
inline double linear_comm_seconds(const std::vector<TraceEvent>& trace,
                                  const std::vector<std::string>& linear_tags) {
  double s = 0;
  for (const TraceEvent& e : trace)
    if (tag_belongs_to(e.tag, linear_tags)) s += e.occupancy();
  return s;
}

inline u64 linear_comm_bytes(const std::vector<TraceEvent>& trace,
                             const std::vector<std::string>& linear_tags) {
  u64 b = 0;
  for (const TraceEvent& e : trace)
    if (tag_belongs_to(e.tag, linear_tags)) b += e.bytes;
  return b;
}

struct PartyReport {
  int party = 0;
  std::vector<double> iter_wall_s;
  double wall_s = 0;  // sum over iterations
  u64 bytes_sent = 0;
  u64 collectives = 0;
  u64 p2p_sends = 0;
  double stall_s = 0;
  double occupancy_s = 0;
  double delta_wait_s = 0;        // weight openings that had a layer to hide under
  double first_delta_wait_s = 0;  // the model's first linear layer: nothing precedes it
  double linear_comm_s = 0;
  u64 linear_bytes = 0;
};

struct RunReport {
  int schema = 1;
  std::string model;
  std::string mode;
  std::string weights_mode = "private";
  SessionConfig session;
  int chunks = 1;
  std::size_t chunk_threshold = 0;
  int iterations = 1;
  Shape logit_shape;
  std::vector<double> logits;  // revealed demo output, decoded
  u64 logits_hash = 0;         // over the raw ring words
  std::vector<PartyReport> parties;

  double wall_s() const {
    double m = 0;
    for (const PartyReport& p : parties) m = std::max(m, p.wall_s);
    return m;
  }
};

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json parties = nlohmann::json::array();
  for (const PartyReport& p : r.parties) {
    parties.push_back(nlohmann::json{
        {"party", p.party},
        {"iter_wall_s", p.iter_wall_s},
        {"wall_s", p.wall_s},
        {"bytes_sent", p.bytes_sent},
        {"collectives", p.collectives},
        {"p2p_sends", p.p2p_sends},
        {"stall_s", p.stall_s},
        {"occupancy_s", p.occupancy_s},
        {"delta_wait_s", p.delta_wait_s},
        {"first_delta_wait_s", p.first_delta_wait_s},
        {"linear_comm_s", p.linear_comm_s},
        {"linear_bytes", p.linear_bytes},
    });
  }
  char hash_hex[19];
  std::snprintf(hash_hex, sizeof hash_hex, "0x%016llx",
                static_cast<unsigned long long>(r.logits_hash));
  return nlohmann::json{
      {"schema", r.schema},
      {"model", r.model},
      {"mode", r.mode},
      {"weights", r.weights_mode},
      {"session", session_to_json(r.session)},
      {"chunks", r.chunks},
      {"chunk_threshold", r.chunk_threshold},
      {"iterations", r.iterations},
      {"wall_s", r.wall_s()},
      {"logit_shape", r.logit_shape},
      {"logits", r.logits},
      {"logits_hash", std::string(hash_hex)},
      {"parties", std::move(parties)},
  };
}

inline std::string report_to_text(const RunReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "model " << r.model << "  mode " << r.mode << "  weights " << r.weights_mode
     << "  parties " << r.session.n_parties << "  backend "
     << (r.session.backend == Backend::Socket ? "socket" : "sim") << "\n";
  os << "latency " << r.session.latency_s * 1e3 << " ms  bandwidth "
     << r.session.bandwidth_bps / 1e9 << " GB/s  chunks " << r.chunks << "  threshold "
     << r.chunk_threshold << " B  iterations " << r.iterations << "\n";
  os << "wall " << r.wall_s() << " s";
  if (r.iterations > 1) os << "  (" << r.wall_s() / r.iterations << " s/iter)";
  os << "\n";
  for (const PartyReport& p : r.parties) {
    os << "  party " << p.party << ": wall " << p.wall_s << " s, sent " << p.bytes_sent
       << " B in " << p.collectives << " collectives + " << p.p2p_sends << " p2p, stall "
       << p.stall_s << " s, delta-wait " << p.delta_wait_s << " s (+ " << p.first_delta_wait_s
       << " s first layer), linear-comm " << p.linear_comm_s << " s / " << p.linear_bytes
       << " B\n";
  }
  char hash_hex[19];
  std::snprintf(hash_hex, sizeof hash_hex, "0x%016llx",
                static_cast<unsigned long long>(r.logits_hash));
  os << "logits hash " << hash_hex << "\n";
  os << "logits";
  const std::size_t show = std::min<std::size_t>(r.logits.size(), 10);
  os.precision(4);
  for (std::size_t i = 0; i < show; ++i) os << " " << r.logits[i];
  if (show < r.logits.size()) os << " ...";
  os << "\n";
  return os.str();
}

}  // namespace mpcpipe
