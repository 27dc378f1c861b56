#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ssperm/accounting.hpp"
#include "ssperm/prg.hpp"
#include "ssperm/ring.hpp"
#include "ssperm/sharing.hpp"
#include "ssperm/transport.hpp"
#include "ssperm/wire.hpp"

namespace ssperm {

enum class RunMode : u8 { LocalSim = 0, Tcp = 1 };
enum class ClipMode : u8 { Piggyback = 0, Eager = 1 };

struct SessionConfig {
  RunMode mode = RunMode::LocalSim;
  u32 session_id = 1;
  int p = 23;
  ClipMode clip_mode = ClipMode::Piggyback;
  std::array<u8, 32> seed_p0p1{};
  std::array<u8, 32> seed_p1p2{};
  u64 data_seed = 1;
  std::array<std::string, 3> addresses = {"127.0.0.1:9100", "127.0.0.1:9101",
                                          "127.0.0.1:9102"};
  bool debug_checks = false;
  // program selection for the party subcommand / session runners
  std::map<std::string, std::string> program;
};

SessionConfig load_session_config(const std::string& path);
void save_session_config(const SessionConfig& cfg, const std::string& path);

// Cross-engine debug instrumentation for local-sim: shadow-reconstructs
// every finalized tensor and checks the fixed-point range bound.
class DebugMonitor {
 public:
  explicit DebugMonitor(int p, double value_bound)
      : fx_(p), bound_(value_bound) {}

  void on_final_share(const SharedTensor& t);
  void check_clipped_share(const std::vector<u64>& share0);
  PlainFixedTensor shadow(u64 tensor_id) const;
  u64 range_violations() const;
  u64 clip_bound_violations() const;
  u64 checked_tensors() const;

 private:
  mutable std::mutex mu_;
  FixedPointConfig fx_;
  double bound_;
  std::map<u64, std::pair<std::optional<std::vector<u64>>,
                          std::optional<std::vector<u64>>>>
      halves_;
  std::map<u64, std::vector<u64>> done_;
  u64 range_violations_ = 0;
  u64 clip_violations_ = 0;
  u64 checked_ = 0;
};

// State of one protocol party. Protocol code is written SPMD-style: every
// party executes the same program and branches on role() internally.
class PartyEngine {
 public:
  PartyEngine(PartyId role, const SessionConfig& cfg,
              std::shared_ptr<Transport> transport,
              std::shared_ptr<TrafficAccounting> acct,
              std::shared_ptr<DebugMonitor> monitor = nullptr);

  PartyId role() const { return role_; }
  bool is(PartyId p) const { return role_ == p; }
  const FixedPointConfig& fx() const { return fx_; }
  const SessionConfig& config() const { return cfg_; }
  TrafficAccounting& accounting() { return *acct_; }
  DebugMonitor* monitor() { return monitor_.get(); }

  CommonPrg& prg_p0p1();
  CommonPrg& prg_p1p2();
  CommonPrg& private_rng() { return private_rng_; }
  CommonPrg& data_rng() { return data_rng_; }

  u64 alloc_tensor_id() { return next_tensor_id_++; }
  void begin_op(const std::string& name);
  const std::string& current_op() const { return op_name_; }
  // accumulated wall time between begin_op calls, keyed by op name
  const std::map<std::string, double>& op_seconds() const {
    return op_seconds_;
  }

  void send_message(PartyId to, Message m, bool offline = false);
  Message recv_message(PartyId from);

  // --- pending-clip registry -------------------------------------------
  // P0 finalizes its own share immediately and queues the index record;
  // P1 parks the raw product until the record arrives (piggybacked on any
  // P0->P1 message, or via a dedicated flush).
  void queue_clip_record(ClipRecord rec);                       // P0
  void park_pending(const SharedTensor& t);                     // P1
  void materialize(const SharedTensor& t);
  bool has_unsent_clip(u64 tensor_id) const;

  // Debug hook: called when a tensor's share reaches its final value.
  void note_final(const SharedTensor& t);

  // Program outputs (opened results, metrics) keyed by name.
  std::map<std::string, PlainFixedTensor> outputs;
  std::map<std::string, double> metrics;

  // Test tap: record of tensor payloads received by this engine.
  bool record_received_tensors = false;
  std::vector<std::pair<MsgType, std::vector<u64>>> received_tensors;

 private:
  void apply_clip_records(const std::vector<ClipRecord>& recs);
  std::vector<ClipRecord> take_unsent_records();

  PartyId role_;
  SessionConfig cfg_;
  FixedPointConfig fx_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<TrafficAccounting> acct_;
  std::shared_ptr<DebugMonitor> monitor_;

  CommonPrg prg_p0p1_;
  CommonPrg prg_p1p2_;
  CommonPrg private_rng_;
  CommonPrg data_rng_;

  u64 next_tensor_id_ = 1;
  u64 op_id_ = 0;
  std::string op_name_ = "idle";
  u64 clock_ = 0;
  std::map<std::string, double> op_seconds_;
  double op_started_ = 0.0;

  std::vector<ClipRecord> unsent_records_;                    // P0 side
  std::map<u64, SharedTensor> parked_;                        // P1 side
};

// Per-element payload accounting helper: tensor elements and clip indices
// count 64 bits each; everything else is header.
u64 payload_bits_of(const Message& m, ClipMode mode, PartyId from, PartyId to);

// Runs one program on three engine threads over an in-process hub.
class LocalSession {
 public:
  explicit LocalSession(const SessionConfig& cfg);

  // Program is executed concurrently by all three engines.
  void run(const std::function<void(PartyEngine&)>& program);

  PartyEngine& engine(PartyId p) { return *engines_[static_cast<int>(p)]; }
  TrafficAccounting& accounting() { return *acct_; }
  DebugMonitor* monitor() { return monitor_.get(); }

 private:
  SessionConfig cfg_;
  std::shared_ptr<LocalHub> hub_;
  std::shared_ptr<TrafficAccounting> acct_;
  std::shared_ptr<DebugMonitor> monitor_;
  std::array<std::unique_ptr<PartyEngine>, 3> engines_;
};

}  // namespace ssperm
