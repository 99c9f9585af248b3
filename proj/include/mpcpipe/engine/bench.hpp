#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mpcpipe/engine/executor.hpp"
#include "mpcpipe/engine/report.hpp"
#include "mpcpipe/transport/harness.hpp"

namespace mpcpipe {

// Everything one benchmark run needs. Weights/input are the plaintext values;
// each party derives its shares from the session seed, standing in for a
// dealer that distributed them beforehand.
struct BenchSpec {
  ModelGraph model;
  WeightMap weights;
  bool public_weights = false;
  DoubleTensor input;
  SessionConfig session;
  ExecOptions exec;
  int iterations = 1;
};

struct PartyResult {
  PartyReport report;
  RingTensor logits;  // revealed at the end of the run
};

// One party's full benchmark body: deal shares, run the model `iterations`
// times, open the logits once at the end. Works for both the in-process sim
// harness and a socket-connected process.
inline PartyResult bench_party(const BenchSpec& spec, Communicator& comm) {
  const int n = comm.n_parties();
  const int party = comm.party();
  SeededDealer dealer(spec.session.seed, party, n);
  CounterRng mask_rng(spec.session.seed ^ 0x9e3779b97f4a7c15ull, static_cast<u64>(party));

  WeightSet wset = spec.public_weights
                       ? public_weight_set(spec.model, spec.weights)
                       : deal_weight_shares(spec.model, spec.weights, n, party,
                                            spec.session.seed);
  SecureExecutor exec(spec.model, std::move(wset), dealer, comm, mask_rng, spec.exec);
  AdditiveShare input =
      deal_input_share(spec.input, spec.model.frac_bits, n, party, spec.session.seed + 1);

  const CommStats before = comm.stats();
  PartyResult res;
  res.report.party = party;
  AdditiveShare out{party, RingTensor{}};
  for (int it = 0; it < spec.iterations; ++it) {
    const double t0 = comm.now();
    out = exec.run(input);
    const double t1 = comm.now();
    res.report.iter_wall_s.push_back(t1 - t0);
    res.report.wall_s += t1 - t0;
  }
  res.logits = comm.reveal(out.tensor, Reduce::Sum, "logits.open");
  res.logits.set_scale_bits(spec.model.frac_bits);

  const CommStats after = comm.stats();
  res.report.bytes_sent = after.bytes_sent - before.bytes_sent;
  res.report.collectives = after.collectives - before.collectives;
  res.report.p2p_sends = after.p2p_sends - before.p2p_sends;
  res.report.stall_s = after.total_stall - before.total_stall;
  res.report.occupancy_s = after.total_occupancy - before.total_occupancy;
  std::vector<std::string> hideable = exec.linear_tags();
  const std::string first = exec.first_linear_tag();
  std::erase(hideable, first);
  res.report.delta_wait_s = delta_wait_seconds(comm.trace(), hideable);
  if (!first.empty())
    res.report.first_delta_wait_s = delta_wait_seconds(comm.trace(), {first});
  res.report.linear_comm_s = linear_comm_seconds(comm.trace(), exec.linear_tags());
  res.report.linear_bytes = linear_comm_bytes(comm.trace(), exec.linear_tags());
  return res;
}

inline RunReport assemble_report(const BenchSpec& spec, std::vector<PartyResult> results) {
  RunReport r;
  r.model = spec.model.name;
  r.mode = exec_mode_name(spec.exec.mode);
  r.weights_mode = spec.public_weights ? "public" : "private";
  r.session = spec.session;
  r.chunks = spec.exec.chunks;
  r.chunk_threshold = spec.exec.chunk_threshold;
  r.iterations = spec.iterations;
  for (PartyResult& pr : results) r.parties.push_back(std::move(pr.report));
  if (!results.empty()) {
    const RingTensor& logits = results.front().logits;
    r.logit_shape = logits.shape();
    r.logits = decode_tensor(logits);
    r.logits_hash = fnv1a_words(logits.data());
  }
  return r;
}

// Thread-per-party simulated run.
inline RunReport run_sim_bench(const BenchSpec& spec) {
  auto comms = make_sim_comms(spec.session);
  std::vector<PartyResult> results(static_cast<std::size_t>(spec.session.n_parties));
  run_parties(spec.session.n_parties, [&](int p) {
    results[static_cast<std::size_t>(p)] = bench_party(spec, *comms[static_cast<std::size_t>(p)]);
  });
  return assemble_report(spec, std::move(results));
}

// Socket-backend run for one process; peers run the same spec themselves.
inline RunReport run_socket_bench_party(const BenchSpec& spec, int party) {
  SocketComm comm(spec.session, party);
  std::vector<PartyResult> results;
  results.push_back(bench_party(spec, comm));
  return assemble_report(spec, std::move(results));
}

// ---- threshold sweep -------------------------------------------------------

enum class SweepOp { Relu, And };

inline const char* sweep_op_name(SweepOp op) { return op == SweepOp::And ? "and" : "relu"; }

struct SweepPoint {
  std::size_t elems = 0;
  std::size_t bytes = 0;  // operand payload
  double blocking_s = 0;
  double chunked_s = 0;
  bool chunked_wins() const { return chunked_s < blocking_s; }
};

struct SweepResult {
  SweepOp op = SweepOp::And;
  int chunks = 1;
  std::vector<SweepPoint> points;
  // Smallest operand size where chunking beat blocking; SIZE_MAX if it never
  // did (the right setting when there is no latency to hide).
  std::size_t threshold_bytes = std::numeric_limits<std::size_t>::max();
  bool finite() const { return threshold_bytes != std::numeric_limits<std::size_t>::max(); }
};

namespace benchdetail {

inline double timed_op_run(SweepOp op, std::size_t elems, int chunks, const SessionConfig& cfg,
                           u64 seed) {
  auto comms = make_sim_comms(cfg);
  std::vector<double> walls(static_cast<std::size_t>(cfg.n_parties), 0.0);
  run_parties(cfg.n_parties, [&](int p) {
    Communicator& comm = *comms[static_cast<std::size_t>(p)];
    SeededDealer dealer(seed, p, cfg.n_parties);
    CounterRng mask(seed ^ 0x5309, static_cast<u64>(p));
    CounterRng vals(seed + 101 * static_cast<u64>(p) + 3, 9);
    RingTensor x(Shape{elems});
    for (auto& v : x.data()) v = vals();
    if (op == SweepOp::And) {
      RingTensor y(Shape{elems});
      for (auto& v : y.data()) v = vals();
      beaver_and({p, x}, {p, std::move(y)}, dealer, comm, "sweep.and", chunks);
    } else {
      ProtoCtx ctx{dealer, comm, mask, kDefaultScaleBits};
      ctx.chunks = chunks;
      ctx.chunk_threshold = 0;
      x.set_scale_bits(kDefaultScaleBits);
      relu_shares({p, std::move(x)}, ctx, "sweep.relu");
    }
    walls[static_cast<std::size_t>(p)] = comm.now();
  });
  return *std::max_element(walls.begin(), walls.end());
}

}  // namespace benchdetail

// Times one op blocking vs chunked across operand sizes and recommends the
// smallest size where chunking pays off. Deterministic under modeled compute.
inline SweepResult sweep_threshold(SweepOp op, const std::vector<std::size_t>& sizes, int chunks,
                                   const SessionConfig& cfg, u64 seed = 7) {
  if (sizes.size() < 2)
    throw ConfigError("insufficient sweep: need at least two operand sizes");
  if (chunks < 2) throw ConfigError("sweep needs chunks >= 2");
  SweepResult r;
  r.op = op;
  r.chunks = chunks;
  for (std::size_t elems : sizes) {
    SweepPoint pt;
    pt.elems = elems;
    pt.bytes = elems * sizeof(u64);
    pt.blocking_s = benchdetail::timed_op_run(op, elems, 1, cfg, seed);
    pt.chunked_s = benchdetail::timed_op_run(op, elems, chunks, cfg, seed);
    if (pt.chunked_wins() && !r.finite()) r.threshold_bytes = pt.bytes;
    r.points.push_back(pt);
  }
  return r;
}

// The calibration step: measure where chunking starts to win for this
// session's latency/bandwidth and use that as the inner-pipeline threshold.
// Relu is the probe op because the chunked engine ops are dominated by the
// same multi-round compare circuitry. Returns SIZE_MAX (pipeline always
// gated off) when chunking never won, e.g. at zero latency.
inline std::size_t calibrate_threshold(const SessionConfig& cfg, int chunks, u64 seed = 7) {
  SessionConfig probe = cfg;
  probe.backend = Backend::Sim;  // timing model of the session's link parameters
  static const std::vector<std::size_t> sizes{1u << 10, 1u << 12, 1u << 14, 1u << 16, 1u << 18};
  return sweep_threshold(SweepOp::Relu, sizes, chunks, probe, seed).threshold_bytes;
}

inline nlohmann::json sweep_to_json(const SweepResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const SweepPoint& p : r.points)
    pts.push_back(nlohmann::json{{"elems", p.elems},
                                 {"bytes", p.bytes},
                                 {"blocking_s", p.blocking_s},
                                 {"chunked_s", p.chunked_s},
                                 {"chunked_wins", p.chunked_wins()}});
  nlohmann::json j{{"op", sweep_op_name(r.op)}, {"chunks", r.chunks}, {"points", std::move(pts)}};
  if (r.finite())
    j["threshold_bytes"] = r.threshold_bytes;
  else
    j["threshold_bytes"] = nullptr;  // chunking never won
  return j;
}

}  // namespace mpcpipe
