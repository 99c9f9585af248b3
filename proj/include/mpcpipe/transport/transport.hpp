#pragma once

#include <string>
#include <vector>

#include "mpcpipe/errors.hpp"
#include "mpcpipe/ring/tensor.hpp"
#include "mpcpipe/transport/config.hpp"

namespace mpcpipe {

enum class Reduce : u8 { Sum = 0, Xor = 1 };

struct SendHandle {
  u32 seq = 0;
  Reduce kind = Reduce::Sum;
  Shape shape;
  std::size_t scale_bits = 0;
  bool waited = false;
};

// One row per collective a party issued; stalls and occupancy are split so a
// run can attribute time to specific reveals (e.g. how long we waited on the
// weight-delta of a linear layer).
struct TraceEvent {
  u32 seq = 0;
  Reduce kind = Reduce::Sum;
  std::string tag;       // caller-supplied label, e.g. "dense3.delta"
  u64 bytes = 0;
  double t_issue = 0;    // clock when reveal_async was called
  double t_sent = 0;     // clock after sender occupancy was charged
  double t_wait_begin = 0;
  double t_wait_end = 0; // == t_wait_begin when data was already there

  double occupancy() const { return t_sent - t_issue; }
  double stall() const { return t_wait_end - t_wait_begin; }
};

struct CommStats {
  u64 bytes_sent = 0;
  u64 collectives = 0;
  u64 p2p_sends = 0;
  double total_stall = 0;      // time blocked in wait()
  double total_occupancy = 0;  // sender-side serialization time
};

// Per-party endpoint. All parties must issue collectives in the same order;
// mismatches are flagged via per-collective sequence numbers. reveal_async
// returns immediately (transfer overlaps the caller's subsequent compute);
// wait() blocks until every contribution arrived and returns the reduction.
class Communicator {
 public:
  virtual ~Communicator() = default;

  virtual int party() const = 0;
  virtual int n_parties() const = 0;

  virtual SendHandle reveal_async(const RingTensor& local, Reduce kind,
                                  const std::string& tag = "") = 0;
  virtual RingTensor wait(SendHandle& h) = 0;

  // Point-to-point (used by share re-distribution). Payload arrives flat;
  // receiver passes the expected shape.
  virtual void send_to(int dest, const RingTensor& payload) = 0;
  virtual RingTensor recv_from(int src, const Shape& shape) = 0;

  // Current time on this party's clock: simulated seconds for the sim
  // backend, wall seconds since session start for sockets.
  virtual double now() = 0;

  // Inject extra elapsed time on this party (sim: clock bump; socket: sleep).
  virtual void add_delay(double seconds) = 0;

  virtual const CommStats& stats() const = 0;
  virtual const std::vector<TraceEvent>& trace() const = 0;
  virtual void clear_trace() = 0;

  RingTensor reveal(const RingTensor& local, Reduce kind, const std::string& tag = "") {
    SendHandle h = reveal_async(local, kind, tag);
    return wait(h);
  }
};

}  // namespace mpcpipe
