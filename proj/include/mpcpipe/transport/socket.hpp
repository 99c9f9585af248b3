#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "mpcpipe/transport/transport.hpp"

namespace mpcpipe {

namespace sock_detail {

inline void put_u32le(std::string& buf, u32 v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64le(std::string& buf, u64 v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline u32 get_u32le(const unsigned char* p) {
  u32 v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<u32>(p[i]) << (8 * i);
  return v;
}
inline u64 get_u64le(const unsigned char* p) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(p[i]) << (8 * i);
  return v;
}

inline bool read_full(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<unsigned char*>(buf);
  while (n > 0) {
    ssize_t got = ::recv(fd, p, n, 0);
    if (got == 0) return false;
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

inline bool write_full(int fd, const void* buf, std::size_t n) {
  auto* p = static_cast<const unsigned char*>(buf);
  while (n > 0) {
    ssize_t put = ::send(fd, p, n, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += put;
    n -= static_cast<std::size_t>(put);
  }
  return true;
}

}  // namespace sock_detail

// Real-socket backend: full TCP mesh on localhost. Values are bit-identical
// to the sim backend; timing is wall-clock. Frames are length-implied binary:
// u32 seq | u8 kind (0 sum-reveal, 1 xor-reveal, 2 p2p) | u32 element count |
// count little-endian u64 words. Each peer link has a writer thread (so
// reveal_async returns without blocking on the kernel buffer) and a reader
// thread feeding shared tables.
class SocketComm : public Communicator {
  static constexpr u8 kFrameSum = 0;
  static constexpr u8 kFrameXor = 1;
  static constexpr u8 kFrameP2p = 2;

 public:
  SocketComm(const SessionConfig& cfg, int party) : cfg_(cfg), party_(party) {
    cfg_.validate();
    if (party_ < 0 || party_ >= cfg_.n_parties) throw ConfigError("bad party index");
    fds_.assign(static_cast<std::size_t>(cfg_.n_parties), -1);
    connect_mesh();
    start_ = std::chrono::steady_clock::now();
    for (int q = 0; q < cfg_.n_parties; ++q) {
      if (q == party_) continue;
      peers_.emplace(q, std::make_unique<Peer>());
      Peer& pr = *peers_[q];
      pr.id = q;
      pr.fd = fds_[static_cast<std::size_t>(q)];
      pr.writer = std::thread([this, &pr] { writer_loop(pr); });
      pr.reader = std::thread([this, &pr] { reader_loop(pr); });
    }
  }

  ~SocketComm() override {
    {
      std::lock_guard<std::mutex> lk(mu_);
      closing_ = true;
      cv_.notify_all();
    }
    for (auto& [q, pr] : peers_) {
      {
        std::lock_guard<std::mutex> lk(pr->out_mu);
        pr->out_closing = true;
        pr->out_cv.notify_all();
      }
      if (pr->writer.joinable()) pr->writer.join();
      ::shutdown(pr->fd, SHUT_RDWR);
      if (pr->reader.joinable()) pr->reader.join();
      ::close(pr->fd);
    }
  }

  int party() const override { return party_; }
  int n_parties() const override { return cfg_.n_parties; }

  SendHandle reveal_async(const RingTensor& local, Reduce kind,
                          const std::string& tag = "") override {
    u32 seq = next_seq_++;
    double t_issue = now_wall();
    std::string frame;
    sock_detail::put_u32le(frame, seq);
    frame.push_back(static_cast<char>(kind == Reduce::Sum ? kFrameSum : kFrameXor));
    sock_detail::put_u32le(frame, static_cast<u32>(local.numel()));
    for (std::size_t i = 0; i < local.numel(); ++i) sock_detail::put_u64le(frame, local.at(i));
    for (auto& [q, pr] : peers_) enqueue(*pr, frame);
    contribute(seq, kind == Reduce::Sum ? kFrameSum : kFrameXor,
               static_cast<u32>(local.numel()), local.data().data(), party_);
    double t_sent = now_wall();
    stats_.bytes_sent += local.numel() * 8 * static_cast<u64>(cfg_.n_parties - 1);
    stats_.collectives++;
    stats_.total_occupancy += t_sent - t_issue;
    trace_idx_[seq] = trace_.size();
    trace_.push_back(TraceEvent{seq, kind, tag, local.numel() * 8, t_issue, t_sent, 0, 0});
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
    double wait_begin = now_wall();
    RingTensor flat;
    {
      std::unique_lock<std::mutex> lk(mu_);
      auto& col = collectives_[h.seq];
      // An EOF'd peer can never contribute, so a collective still missing its
      // share is unsatisfiable; one that already has every share delivers
      // normally no matter who has since left.
      auto dead_contributor = [&] { return (eof_mask_ & ~col.contrib_mask) != 0; };
      cv_.wait(lk, [&] {
        return col.n_contrib == cfg_.n_parties || !error_.empty() || dead_contributor();
      });
      if (col.n_contrib != cfg_.n_parties) {
        if (!error_.empty()) throw TransportError(error_);
        throw TransportError("peer disconnected before collective " + std::to_string(h.seq));
      }
      std::size_t n = col.acc.size();
      flat = RingTensor(Shape{n}, std::move(col.acc));
      collectives_.erase(h.seq);
    }
    double wait_end = now_wall();
    auto it = trace_idx_.find(h.seq);
    if (it != trace_idx_.end()) {
      trace_[it->second].t_wait_begin = wait_begin;
      trace_[it->second].t_wait_end = wait_end;
    }
    stats_.total_stall += wait_end - wait_begin;
    RingTensor out = reshape(flat, h.shape);
    out.set_scale_bits(h.scale_bits);
    return out;
  }

  void send_to(int dest, const RingTensor& payload) override {
    auto it = peers_.find(dest);
    if (it == peers_.end()) throw UsageError("send_to: bad destination");
    std::string frame;
    sock_detail::put_u32le(frame, p2p_seq_++);
    frame.push_back(static_cast<char>(kFrameP2p));
    sock_detail::put_u32le(frame, static_cast<u32>(payload.numel()));
    for (std::size_t i = 0; i < payload.numel(); ++i)
      sock_detail::put_u64le(frame, payload.at(i));
    enqueue(*it->second, frame);
    stats_.p2p_sends++;
    stats_.bytes_sent += payload.numel() * 8;
  }

  RingTensor recv_from(int src, const Shape& shape) override {
    double wait_begin = now_wall();
    std::vector<u64> data;
    {
      std::unique_lock<std::mutex> lk(mu_);
      auto& q = p2p_in_[src];
      cv_.wait(lk, [&] {
        return !q.empty() || !error_.empty() || ((eof_mask_ >> src) & 1) != 0;
      });
      if (q.empty()) {
        if (!error_.empty()) throw TransportError(error_);
        throw TransportError("peer " + std::to_string(src) + " disconnected before sending");
      }
      data = std::move(q.front());
      q.pop_front();
    }
    if (data.size() != shape_numel(shape)) throw ProtocolError("recv_from: payload size mismatch");
    stats_.total_stall += now_wall() - wait_begin;
    return RingTensor(shape, std::move(data));
  }

  double now() override { return now_wall(); }

  void add_delay(double seconds) override {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  const CommStats& stats() const override { return stats_; }
  const std::vector<TraceEvent>& trace() const override { return trace_; }
  void clear_trace() override {
    trace_.clear();
    trace_idx_.clear();
  }

 private:
  struct Peer {
    int id = -1;
    int fd = -1;
    std::thread writer;
    std::thread reader;
    std::mutex out_mu;
    std::condition_variable out_cv;
    std::deque<std::string> outq;
    bool out_closing = false;
  };

  struct Collective {
    u8 kind = 0;
    u32 count = 0;
    std::vector<u64> acc;
    int n_contrib = 0;
    u32 contrib_mask = 0;  // party bits, self included
    int n_waited = 0;
  };

  double now_wall() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void enqueue(Peer& pr, const std::string& frame) {
    std::lock_guard<std::mutex> lk(pr.out_mu);
    pr.outq.push_back(frame);
    pr.out_cv.notify_one();
  }

  void writer_loop(Peer& pr) {
    for (;;) {
      std::string frame;
      {
        std::unique_lock<std::mutex> lk(pr.out_mu);
        pr.out_cv.wait(lk, [&] { return !pr.outq.empty() || pr.out_closing; });
        if (pr.outq.empty()) return;
        frame = std::move(pr.outq.front());
        pr.outq.pop_front();
      }
      if (!sock_detail::write_full(pr.fd, frame.data(), frame.size())) {
        fail("socket write failed");
        return;
      }
    }
  }

  void reader_loop(Peer& pr) {
    for (;;) {
      unsigned char head[9];
      if (!sock_detail::read_full(pr.fd, head, sizeof head)) {
        // A peer that is done sends nothing more; that only matters to waits
        // which still need data from it, so record the fact per peer instead
        // of poisoning the whole session.
        std::lock_guard<std::mutex> lk(mu_);
        eof_mask_ |= u32(1) << pr.id;
        cv_.notify_all();
        return;
      }
      u32 seq = sock_detail::get_u32le(head);
      u8 kind = head[4];
      u32 count = sock_detail::get_u32le(head + 5);
      std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 8);
      if (!raw.empty() && !sock_detail::read_full(pr.fd, raw.data(), raw.size())) {
        fail("truncated frame");
        return;
      }
      std::vector<u64> words(count);
      for (u32 i = 0; i < count; ++i)
        words[i] = sock_detail::get_u64le(raw.data() + static_cast<std::size_t>(i) * 8);
      if (kind == kFrameP2p) {
        std::lock_guard<std::mutex> lk(mu_);
        p2p_in_[pr.id].push_back(std::move(words));
        cv_.notify_all();
      } else {
        try {
          contribute(seq, kind, count, words.data(), pr.id);
        } catch (const ProtocolError&) {
          return;  // error_ set; waiters already notified
        }
      }
    }
  }

  void contribute(u32 seq, u8 kind, u32 count, const u64* words, int from) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& col = collectives_[seq];
    if (col.n_contrib == 0) {
      col.kind = kind;
      col.count = count;
      col.acc.assign(count, 0);
    } else if (col.kind != kind || col.count != count) {
      error_ = "collective desync at seq " + std::to_string(seq);
      cv_.notify_all();
      throw ProtocolError(error_);
    }
    for (u32 i = 0; i < count; ++i)
      col.acc[i] = kind == kFrameSum ? radd(col.acc[i], words[i]) : (col.acc[i] ^ words[i]);
    col.n_contrib++;
    col.contrib_mask |= u32(1) << from;
    cv_.notify_all();
  }

  void fail(const std::string& msg) {
    std::lock_guard<std::mutex> lk(mu_);
    if (closing_) return;
    if (error_.empty()) error_ = msg;
    cv_.notify_all();
  }

  void connect_mesh() {
    int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(cfg_.port_base + party_));
    if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      ::close(listen_fd);
      throw TransportError("bind failed on port " + std::to_string(cfg_.port_base + party_));
    }
    if (::listen(listen_fd, 8) < 0) {
      ::close(listen_fd);
      throw TransportError("listen failed");
    }
    // Lower-numbered peers run first in accept order; we dial them, higher
    // peers dial us. listen() precedes all dials, so the backlog absorbs
    // ordering races.
    for (int q = 0; q < party_; ++q) {
      int fd = -1;
      for (int attempt = 0; attempt < 600; ++attempt) {
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in peer{};
        peer.sin_family = AF_INET;
        peer.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        peer.sin_port = htons(static_cast<uint16_t>(cfg_.port_base + q));
        if (::connect(fd, reinterpret_cast<sockaddr*>(&peer), sizeof peer) == 0) break;
        ::close(fd);
        fd = -1;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      if (fd < 0) {
        ::close(listen_fd);
        throw TransportError("cannot connect to party " + std::to_string(q));
      }
      u8 hello = static_cast<u8>(party_);
      if (!sock_detail::write_full(fd, &hello, 1)) throw TransportError("hello write failed");
      set_nodelay(fd);
      fds_[static_cast<std::size_t>(q)] = fd;
    }
    for (int q = party_ + 1; q < cfg_.n_parties; ++q) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) {
        ::close(listen_fd);
        throw TransportError("accept failed");
      }
      u8 hello = 0;
      if (!sock_detail::read_full(fd, &hello, 1)) throw TransportError("hello read failed");
      set_nodelay(fd);
      fds_[hello] = fd;
    }
    ::close(listen_fd);
    for (int q = 0; q < cfg_.n_parties; ++q)
      if (q != party_ && fds_[static_cast<std::size_t>(q)] < 0)
        throw TransportError("mesh incomplete: missing party " + std::to_string(q));
  }

  static void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  SessionConfig cfg_;
  int party_;
  std::vector<int> fds_;
  std::map<int, std::unique_ptr<Peer>> peers_;
  std::chrono::steady_clock::time_point start_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<u32, Collective> collectives_;
  std::map<int, std::deque<std::vector<u64>>> p2p_in_;
  std::string error_;
  bool closing_ = false;
  u32 eof_mask_ = 0;  // peers whose stream hit EOF

  u32 next_seq_ = 0;
  u32 p2p_seq_ = 0;
  CommStats stats_;
  std::vector<TraceEvent> trace_;
  std::unordered_map<u32, std::size_t> trace_idx_;
};

}  // namespace mpcpipe
