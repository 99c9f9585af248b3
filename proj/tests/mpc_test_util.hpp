#pragma once

// Shared helpers for multi-party test bodies.

#include <stdexcept>
#include <vector>

#include "mpcpipe/sharing/rng.hpp"
#include "mpcpipe/sharing/share.hpp"
#include "mpcpipe/transport/harness.hpp"

// Catch assertions are not thread-safe; party-thread checks throw instead and
// run_parties rethrows into the main test thread.
#define REQUIRE_T(cond)                                                       \
  do {                                                                        \
    if (!(cond)) throw std::logic_error("party-thread check failed: " #cond); \
  } while (0)

namespace mpct {

inline mpcpipe::SessionConfig sim_cfg(int n, double latency = 0.0, double bw = 1e9) {
  mpcpipe::SessionConfig cfg;
  cfg.n_parties = n;
  cfg.backend = mpcpipe::Backend::Sim;
  cfg.latency_s = latency;
  cfg.bandwidth_bps = bw;
  cfg.sec_per_message = 0;
  cfg.sec_per_unit = 0;
  cfg.sec_per_dispatch = 0;
  return cfg;
}

inline mpcpipe::RingTensor random_tensor(const mpcpipe::Shape& shape, mpcpipe::CounterRng& rng,
                                         int scale_bits = 0) {
  mpcpipe::RingTensor t(shape, scale_bits);
  for (auto& w : t.data()) w = rng();
  return t;
}

// Collects one result tensor per party and reconstructs.
template <typename Share, typename Fn>
mpcpipe::RingTensor run_and_reconstruct(const mpcpipe::SessionConfig& cfg, Fn body) {
  auto comms = mpcpipe::make_sim_comms(cfg);
  std::vector<Share> outs(static_cast<std::size_t>(cfg.n_parties),
                          Share{0, mpcpipe::RingTensor({1})});
  mpcpipe::run_parties(cfg.n_parties, [&](int p) {
    outs[static_cast<std::size_t>(p)] = body(p, *comms[p]);
  });
  return mpcpipe::reconstruct(outs);
}

}  // namespace mpct
