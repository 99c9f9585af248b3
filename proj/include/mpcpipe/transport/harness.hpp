#pragma once

#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "mpcpipe/transport/sim.hpp"
#include "mpcpipe/transport/socket.hpp"

namespace mpcpipe {

inline std::vector<std::shared_ptr<Communicator>> make_sim_comms(const SessionConfig& cfg) {
  auto net = std::make_shared<SimNet>(cfg);
  std::vector<std::shared_ptr<Communicator>> out;
  for (int p = 0; p < cfg.n_parties; ++p) out.push_back(std::make_shared<SimComm>(net, p));
  return out;
}

// Runs fn(party) on one thread per party and rethrows the first failure.
// Party bodies block on each other's messages, so they must run concurrently.
inline void run_parties(int n, const std::function<void(int)>& fn) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    threads.emplace_back([&, p] {
      try {
        fn(p);
      } catch (...) {
        errs[static_cast<std::size_t>(p)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace mpcpipe
