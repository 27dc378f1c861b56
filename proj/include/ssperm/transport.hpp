#pragma once

#include <array>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ssperm/common.hpp"
#include "ssperm/sharing.hpp"

namespace ssperm {

// A wire message plus its causal depth. The depth is transport framing used
// by the traffic ledger for round counting; it is not part of the message
// format itself.
struct Envelope {
  std::vector<u8> bytes;
  u32 depth = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(PartyId to, Envelope env) = 0;
  virtual Envelope recv(PartyId from) = 0;  // blocking, per-link FIFO
  virtual void shutdown() {}
};

// Thread-safe FIFO mailbox, one per directed link.
class Mailbox {
 public:
  void push(Envelope env) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(env));
    }
    cv_.notify_all();
  }

  Envelope pop() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) throw LinkClosedError("link closed");
    Envelope env = std::move(q_.front());
    q_.pop_front();
    return env;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Envelope> q_;
  bool closed_ = false;
};

// Shared in-process hub for local-sim mode: six mailboxes, one per link.
class LocalHub {
 public:
  Mailbox& box(PartyId from, PartyId to) {
    return boxes_[static_cast<int>(from) * 3 + static_cast<int>(to)];
  }
  void close_all() {
    for (auto& b : boxes_) b.close();
  }

 private:
  std::array<Mailbox, 9> boxes_;
};

class LocalTransport : public Transport {
 public:
  LocalTransport(std::shared_ptr<LocalHub> hub, PartyId self)
      : hub_(std::move(hub)), self_(self) {}

  void send(PartyId to, Envelope env) override {
    hub_->box(self_, to).push(std::move(env));
  }
  Envelope recv(PartyId from) override { return hub_->box(from, self_).pop(); }

 private:
  std::shared_ptr<LocalHub> hub_;
  PartyId self_;
};

// One duplex TCP connection per party pair; length-prefixed frames of
// [len u32][depth u32][message bytes]. Reader threads feed the mailboxes.
class TcpTransport : public Transport {
 public:
  // addresses: host:port per party; lower-numbered role listens.
  TcpTransport(PartyId self, const std::array<std::string, 3>& addresses);
  ~TcpTransport() override;

  void send(PartyId to, Envelope env) override;
  Envelope recv(PartyId from) override;
  void shutdown() override;

 private:
  void reader_loop(PartyId from);

  PartyId self_;
  std::array<int, 3> fds_{-1, -1, -1};
  std::array<Mailbox, 3> inbox_;
  std::array<std::mutex, 3> send_mu_;
  std::vector<std::thread> readers_;
  bool down_ = false;
};

}  // namespace ssperm
