#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/ring_ops.hpp"

namespace mpcpipe {

enum class Backend { Sim, Socket };

// Sim-mode compute accounting: "modeled" charges the deterministic work meter
// (units * sec_per_unit + dispatches * sec_per_dispatch), giving exact replay;
// "measured" charges real wall-clock between transport calls (hybrid mode,
// non-deterministic timing, identical values).
enum class ComputeModel { Modeled, Measured };

struct SessionConfig {
  int n_parties = 2;
  Backend backend = Backend::Sim;
  double latency_s = 0.001;       // one-way per-link latency
  double bandwidth_bps = 1e9;     // bytes per second per link
  u64 seed = 1;
  ComputeModel compute = ComputeModel::Modeled;
  double sec_per_unit = 1e-9;     // modeled cost of one element-op
  double sec_per_dispatch = 5e-6; // modeled per-kernel launch overhead
  double sec_per_message = 2e-6;  // per-message send overhead (both backends' model)
  int port_base = 18450;          // socket backend; MPCPIPE_PORT_BASE overrides

  void validate() const {
    if (n_parties < 2 || n_parties > 3) throw ConfigError("n_parties must be 2 or 3");
    if (latency_s < 0) throw ConfigError("latency must be >= 0");
    if (bandwidth_bps <= 0) throw ConfigError("bandwidth must be > 0");
  }
};

inline double simulated_transfer_time(std::size_t bytes, const SessionConfig& cfg) {
  return cfg.latency_s + static_cast<double>(bytes) / cfg.bandwidth_bps;
}

inline nlohmann::json session_to_json(const SessionConfig& c) {
  return nlohmann::json{
      {"n_parties", c.n_parties},
      {"backend", c.backend == Backend::Socket ? "socket" : "sim"},
      {"latency_s", c.latency_s},
      {"bandwidth_bps", c.bandwidth_bps},
      {"seed", c.seed},
      {"compute", c.compute == ComputeModel::Measured ? "measured" : "modeled"},
      {"sec_per_unit", c.sec_per_unit},
      {"sec_per_dispatch", c.sec_per_dispatch},
      {"sec_per_message", c.sec_per_message},
      {"port_base", c.port_base},
  };
}

inline SessionConfig session_from_json(const nlohmann::json& j) {
  SessionConfig c;
  c.n_parties = j.value("n_parties", c.n_parties);
  std::string b = j.value("backend", std::string("sim"));
  if (b == "sim") c.backend = Backend::Sim;
  else if (b == "socket") c.backend = Backend::Socket;
  else throw ConfigError("unknown backend: " + b);
  c.latency_s = j.value("latency_s", c.latency_s);
  c.bandwidth_bps = j.value("bandwidth_bps", c.bandwidth_bps);
  c.seed = j.value("seed", c.seed);
  std::string m = j.value("compute", std::string("modeled"));
  if (m == "modeled") c.compute = ComputeModel::Modeled;
  else if (m == "measured") c.compute = ComputeModel::Measured;
  else throw ConfigError("unknown compute model: " + m);
  c.sec_per_unit = j.value("sec_per_unit", c.sec_per_unit);
  c.sec_per_dispatch = j.value("sec_per_dispatch", c.sec_per_dispatch);
  c.sec_per_message = j.value("sec_per_message", c.sec_per_message);
  c.port_base = j.value("port_base", c.port_base);
  if (const char* env = std::getenv("MPCPIPE_PORT_BASE")) c.port_base = std::atoi(env);
  c.validate();
  return c;
}

inline SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("bad session config json: " + std::string(e.what()));
  }
  return session_from_json(j);
}

}  // namespace mpcpipe
