#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

// Deterministic simulated network. Each party advances its own logical clock:
// local compute is charged from the work meter (or real wall time in measured
// mode), a reveal charges the sender (n-1) * (per-message overhead +
// bytes/bandwidth) of serialization occupancy, and the wire latency runs in
// parallel — a contribution from q is visible to p at send_end(q) + latency.
// Receiving costs nothing (background progress). Real threads only carry the
// data; every timestamp is derived from the logical clocks, so elapsed
// simulated time is exactly reproducible.
class SimNet {
 public:
  explicit SimNet(SessionConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.backend != Backend::Sim) throw ConfigError("SimNet requires sim backend");
  }

  const SessionConfig& config() const { return cfg_; }

 private:
  friend class SimComm;

  struct Collective {
    Reduce kind = Reduce::Sum;
    u64 numel = 0;
    Shape shape;
    RingTensor acc;
    std::vector<bool> contributed;
    std::vector<double> send_end;
    int n_contrib = 0;
    int n_waited = 0;
  };

  struct P2pMsg {
    std::vector<u64> data;
    double arrival = 0;
  };

  Collective& slot(u32 seq) {
    auto it = collectives_.find(seq);
    if (it == collectives_.end()) {
      Collective c;
      c.contributed.assign(static_cast<std::size_t>(cfg_.n_parties), false);
      c.send_end.assign(static_cast<std::size_t>(cfg_.n_parties), 0.0);
      it = collectives_.emplace(seq, std::move(c)).first;
    }
    return it->second;
  }

  SessionConfig cfg_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<u32, Collective> collectives_;
  std::map<std::pair<int, int>, std::deque<P2pMsg>> p2p_;
  std::string error_;  // global so a desync wakes waiters on every sequence
};

class SimComm : public Communicator {
 public:
  SimComm(std::shared_ptr<SimNet> net, int party)
      : net_(std::move(net)), party_(party), last_touch_(std::chrono::steady_clock::now()) {
    if (party_ < 0 || party_ >= net_->cfg_.n_parties) throw ConfigError("bad party index");
    meter::drain();  // don't bill setup work to the session
  }

  int party() const override { return party_; }
  int n_parties() const override { return net_->cfg_.n_parties; }

  SendHandle reveal_async(const RingTensor& local, Reduce kind,
                          const std::string& tag = "") override {
    charge_compute();
    const auto& cfg = net_->cfg_;
    u32 seq = next_seq_++;
    u64 bytes = local.numel() * 8;
    double t_issue = clock_;
    clock_ += (cfg.n_parties - 1) *
              (cfg.sec_per_message + static_cast<double>(bytes) / cfg.bandwidth_bps);
    double send_end = clock_;
    {
      std::lock_guard<std::mutex> lk(net_->mu_);
      auto& col = net_->slot(seq);
      if (col.n_contrib == 0) {
        col.kind = kind;
        col.numel = local.numel();
        col.shape = local.shape();
        col.acc = RingTensor(Shape{local.numel()}, 0);
      } else if (col.kind != kind || col.numel != local.numel() || col.shape != local.shape()) {
        net_->error_ = "collective desync at seq " + std::to_string(seq);
        net_->cv_.notify_all();
        throw ProtocolError(net_->error_);
      }
      if (col.contributed[static_cast<std::size_t>(party_)]) {
        net_->error_ = "duplicate contribution at seq " + std::to_string(seq);
        net_->cv_.notify_all();
        throw ProtocolError(net_->error_);
      }
      for (std::size_t i = 0; i < local.numel(); ++i) {
        col.acc.at(i) = kind == Reduce::Sum ? radd(col.acc.at(i), local.at(i))
                                            : (col.acc.at(i) ^ local.at(i));
      }
      col.contributed[static_cast<std::size_t>(party_)] = true;
      col.send_end[static_cast<std::size_t>(party_)] = send_end;
      col.n_contrib++;
      net_->cv_.notify_all();
    }
    stats_.bytes_sent += bytes * static_cast<u64>(cfg.n_parties - 1);
    stats_.collectives++;
    stats_.total_occupancy += send_end - t_issue;
    trace_idx_[seq] = trace_.size();
    trace_.push_back(TraceEvent{seq, kind, tag, bytes, t_issue, send_end, 0, 0});
    SendHandle h;
    h.seq = seq;
    h.kind = kind;
    h.shape = local.shape();
    h.scale_bits = local.scale_bits();
    return h;
  }

  RingTensor wait(SendHandle& h) override {
    if (h.waited) throw UsageError("wait() called twice on one handle");
    h.waited = true;
    charge_compute();
    double wait_begin = clock_;
    RingTensor flat;
    double avail = 0;
    {
      std::unique_lock<std::mutex> lk(net_->mu_);
      auto& col = net_->slot(h.seq);
      net_->cv_.wait(lk, [&] {
        return col.n_contrib == net_->cfg_.n_parties || !net_->error_.empty();
      });
      if (!net_->error_.empty()) throw ProtocolError(net_->error_);
      for (int q = 0; q < net_->cfg_.n_parties; ++q) {
        double t = col.send_end[static_cast<std::size_t>(q)];
        if (q != party_) t += net_->cfg_.latency_s;
        if (t > avail) avail = t;
      }
      flat = col.acc;
      col.n_waited++;
      if (col.n_waited == net_->cfg_.n_parties) net_->collectives_.erase(h.seq);
    }
    if (avail > clock_) clock_ = avail;
    auto it = trace_idx_.find(h.seq);
    if (it != trace_idx_.end()) {
      trace_[it->second].t_wait_begin = wait_begin;
      trace_[it->second].t_wait_end = clock_;
    }
    stats_.total_stall += clock_ - wait_begin;
    RingTensor out = reshape(flat, h.shape);
    out.set_scale_bits(h.scale_bits);
    return out;
  }

  void send_to(int dest, const RingTensor& payload) override {
    if (dest == party_ || dest < 0 || dest >= net_->cfg_.n_parties)
      throw UsageError("send_to: bad destination");
    charge_compute();
    const auto& cfg = net_->cfg_;
    u64 bytes = payload.numel() * 8;
    clock_ += cfg.sec_per_message + static_cast<double>(bytes) / cfg.bandwidth_bps;
    SimNet::P2pMsg msg;
    msg.data.assign(payload.data().begin(), payload.data().end());
    msg.arrival = clock_ + cfg.latency_s;
    {
      std::lock_guard<std::mutex> lk(net_->mu_);
      net_->p2p_[{party_, dest}].push_back(std::move(msg));
      net_->cv_.notify_all();
    }
    stats_.p2p_sends++;
    stats_.bytes_sent += bytes;
  }

  RingTensor recv_from(int src, const Shape& shape) override {
    if (src == party_ || src < 0 || src >= net_->cfg_.n_parties)
      throw UsageError("recv_from: bad source");
    charge_compute();
    double wait_begin = clock_;
    SimNet::P2pMsg msg;
    {
      std::unique_lock<std::mutex> lk(net_->mu_);
      auto& q = net_->p2p_[{src, party_}];
      net_->cv_.wait(lk, [&] { return !q.empty() || !net_->error_.empty(); });
      if (!net_->error_.empty()) throw ProtocolError(net_->error_);
      msg = std::move(q.front());
      q.pop_front();
    }
    if (msg.data.size() != shape_numel(shape))
      throw ProtocolError("recv_from: payload size mismatch");
    if (msg.arrival > clock_) clock_ = msg.arrival;
    stats_.total_stall += clock_ - wait_begin;
    return RingTensor(shape, std::move(msg.data));
  }

  double now() override {
    charge_compute();
    return clock_;
  }

  void add_delay(double seconds) override { clock_ += seconds; }

  const CommStats& stats() const override { return stats_; }
  const std::vector<TraceEvent>& trace() const override { return trace_; }
  void clear_trace() override {
    trace_.clear();
    trace_idx_.clear();
  }

 private:
  void charge_compute() {
    auto w = meter::drain();
    if (net_->cfg_.compute == ComputeModel::Modeled) {
      clock_ += static_cast<double>(w.units) * net_->cfg_.sec_per_unit +
                static_cast<double>(w.dispatches) * net_->cfg_.sec_per_dispatch;
    } else {
      auto now_t = std::chrono::steady_clock::now();
      clock_ += std::chrono::duration<double>(now_t - last_touch_).count();
    }
    last_touch_ = std::chrono::steady_clock::now();
  }

  std::shared_ptr<SimNet> net_;
  int party_;
  double clock_ = 0;
  u32 next_seq_ = 0;
  CommStats stats_;
  std::vector<TraceEvent> trace_;
  std::unordered_map<u32, std::size_t> trace_idx_;
  std::chrono::steady_clock::time_point last_touch_;
};

}  // namespace mpcpipe
