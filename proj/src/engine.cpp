#include "ssperm/engine.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace ssperm {

// --- config ----------------------------------------------------------------

static std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  SessionConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "mode") {
      if (val == "local-sim") cfg.mode = RunMode::LocalSim;
      else if (val == "tcp") cfg.mode = RunMode::Tcp;
      else throw ConfigError("bad mode: " + val);
    } else if (key == "session_id") {
      cfg.session_id = static_cast<u32>(std::stoul(val));
    } else if (key == "p") {
      cfg.p = std::stoi(val);
    } else if (key == "clip_mode") {
      if (val == "piggyback") cfg.clip_mode = ClipMode::Piggyback;
      else if (val == "eager") cfg.clip_mode = ClipMode::Eager;
      else throw ConfigError("bad clip_mode: " + val);
    } else if (key == "seed_p0p1") {
      cfg.seed_p0p1 = seed_from_hex(val);
    } else if (key == "seed_p1p2") {
      cfg.seed_p1p2 = seed_from_hex(val);
    } else if (key == "data_seed") {
      cfg.data_seed = std::stoull(val);
    } else if (key == "p0_addr") {
      cfg.addresses[0] = val;
    } else if (key == "p1_addr") {
      cfg.addresses[1] = val;
    } else if (key == "p2_addr") {
      cfg.addresses[2] = val;
    } else if (key == "debug_checks") {
      cfg.debug_checks = (val == "1" || val == "true");
    } else if (key.rfind("program.", 0) == 0) {
      cfg.program[key.substr(8)] = val;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return cfg;
}

void save_session_config(const SessionConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config: " + path);
  auto hex = [](const std::array<u8, 32>& s) {
    static const char* digits = "0123456789abcdef";
    std::string h;
    for (u8 b : s) {
      h += digits[b >> 4];
      h += digits[b & 0xf];
    }
    return h;
  };
  out << "mode = " << (cfg.mode == RunMode::LocalSim ? "local-sim" : "tcp")
      << "\n";
  out << "session_id = " << cfg.session_id << "\n";
  out << "p = " << cfg.p << "\n";
  out << "clip_mode = "
      << (cfg.clip_mode == ClipMode::Piggyback ? "piggyback" : "eager")
      << "\n";
  out << "seed_p0p1 = " << hex(cfg.seed_p0p1) << "\n";
  out << "seed_p1p2 = " << hex(cfg.seed_p1p2) << "\n";
  out << "data_seed = " << cfg.data_seed << "\n";
  out << "p0_addr = " << cfg.addresses[0] << "\n";
  out << "p1_addr = " << cfg.addresses[1] << "\n";
  out << "p2_addr = " << cfg.addresses[2] << "\n";
  out << "debug_checks = " << (cfg.debug_checks ? 1 : 0) << "\n";
  for (const auto& [k, v] : cfg.program) out << "program." << k << " = " << v
                                             << "\n";
}

// --- debug monitor ----------------------------------------------------------

void DebugMonitor::on_final_share(const SharedTensor& t) {
  if (!t.holds_data()) return;
  std::lock_guard<std::mutex> lk(mu_);
  checked_++;
  auto& slot = halves_[t.tensor_id];
  if (t.owner == PartyId::P0) slot.first = t.vals();
  else slot.second = t.vals();
  if (slot.first && slot.second) {
    const auto& a = *slot.first;
    const auto& b = *slot.second;
    std::vector<u64> plain(a.size());
    for (size_t i = 0; i < a.size(); i++) {
      plain[i] = ring_add(a[i], b[i]);
      double v = decode(plain[i], fx_);
      if (!(std::fabs(v) < bound_)) range_violations_++;
    }
    done_[t.tensor_id] = std::move(plain);
    halves_.erase(t.tensor_id);
    // keep the shadow window bounded for long training runs
    while (done_.size() > 4096) done_.erase(done_.begin());
  }
}

void DebugMonitor::check_clipped_share(const std::vector<u64>& share0) {
  std::lock_guard<std::mutex> lk(mu_);
  constexpr i64 bound = i64(1) << (kRingBits - 2);
  for (u64 v : share0) {
    i64 s = ring_signed(v);
    if (s >= bound || s < -bound) clip_violations_++;
  }
}

PlainFixedTensor DebugMonitor::shadow(u64 tensor_id) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = done_.find(tensor_id);
  if (it == done_.end()) throw IdMismatchError("no shadow for tensor");
  return PlainFixedTensor({it->second.size()}, it->second);
}

u64 DebugMonitor::range_violations() const {
  std::lock_guard<std::mutex> lk(mu_);
  return range_violations_;
}
u64 DebugMonitor::clip_bound_violations() const {
  std::lock_guard<std::mutex> lk(mu_);
  return clip_violations_;
}
u64 DebugMonitor::checked_tensors() const {
  std::lock_guard<std::mutex> lk(mu_);
  return checked_;
}

// --- engine -----------------------------------------------------------------

PartyEngine::PartyEngine(PartyId role, const SessionConfig& cfg,
                         std::shared_ptr<Transport> transport,
                         std::shared_ptr<TrafficAccounting> acct,
                         std::shared_ptr<DebugMonitor> monitor)
    : role_(role),
      cfg_(cfg),
      fx_(cfg.p),
      transport_(std::move(transport)),
      acct_(std::move(acct)),
      monitor_(std::move(monitor)),
      prg_p0p1_(cfg.seed_p0p1),
      prg_p1p2_(cfg.seed_p1p2),
      private_rng_(derive_seed(seed_from_u64(cfg.data_seed),
                               0x70 + static_cast<u64>(role))),
      data_rng_(derive_seed(seed_from_u64(cfg.data_seed), 0xda7a)) {}

CommonPrg& PartyEngine::prg_p0p1() {
  if (role_ == PartyId::P2)
    throw ProtocolError("p2 has no access to the (p0,p1) prg");
  return prg_p0p1_;
}

CommonPrg& PartyEngine::prg_p1p2() {
  if (role_ == PartyId::P0)
    throw ProtocolError("p0 has no access to the (p1,p2) prg");
  return prg_p1p2_;
}

static double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void PartyEngine::begin_op(const std::string& name) {
  double t = now_seconds();
  if (op_started_ > 0.0) op_seconds_[op_name_] += t - op_started_;
  op_started_ = t;
  op_id_++;
  op_name_ = name;
  clock_ = 0;
}

void PartyEngine::send_message(PartyId to, Message m, bool offline) {
  m.session_id = cfg_.session_id;
  bool flush_scope = (m.msg_type == MsgType::ClipIndices);
  if (role_ == PartyId::P0 && to == PartyId::P1 &&
      cfg_.clip_mode == ClipMode::Piggyback &&
      m.msg_type != MsgType::ClipIndices) {
    // prefix the pending clip-adjustment block (possibly empty)
    std::vector<u8> payload;
    append_clip_block(payload, take_unsent_records());
    payload.insert(payload.end(), m.payload.begin(), m.payload.end());
    m.payload = std::move(payload);
  }
  std::vector<u8> bytes = encode_message(m);
  u64 bits = payload_bits_of(m, cfg_.clip_mode, role_, to);
  // Dedicated clip flushes are their own one-round mini-op (bucket 0);
  // everything else extends the current op's causal chain.
  bool flush_bucket = flush_scope && op_name_ == "clip_flush";
  u64 depth;
  if (flush_bucket) {
    depth = 1;
  } else {
    depth = clock_ + 1;
    clock_ = depth;
  }
  acct_->record_flight(role_, to, bits, bytes.size(), offline,
                       flush_bucket ? 0 : op_id_,
                       flush_bucket ? "clip_flush" : op_name_, depth,
                       fnv1a(bytes.data(), bytes.size()));
  transport_->send(to, Envelope{std::move(bytes), static_cast<u32>(depth)});
}

Message PartyEngine::recv_message(PartyId from) {
  Envelope env = transport_->recv(from);
  clock_ = std::max<u64>(clock_, env.depth);
  Message m = decode_message(env.bytes);
  if (m.session_id != cfg_.session_id)
    throw ProtocolError("message from a different session");
  bool has_block =
      role_ == PartyId::P1 && from == PartyId::P0 &&
      (cfg_.clip_mode == ClipMode::Piggyback ||
       m.msg_type == MsgType::ClipIndices);
  if (has_block) {
    size_t pos = 0;
    auto recs = read_clip_block(m.payload, pos);
    apply_clip_records(recs);
    m.payload.erase(m.payload.begin(), m.payload.begin() + pos);
  }
  if (record_received_tensors && m.msg_type != MsgType::ClipIndices &&
      m.msg_type != MsgType::Control) {
    size_t pos = 0;
    while (pos < m.payload.size()) {
      TensorBlock tb = read_tensor_block(m.payload, pos);
      received_tensors.emplace_back(m.msg_type, std::move(tb.elems));
    }
  }
  return m;
}

void PartyEngine::queue_clip_record(ClipRecord rec) {
  if (role_ != PartyId::P0) throw ProtocolError("clip records queue on p0");
  unsent_records_.push_back(std::move(rec));
  if (cfg_.clip_mode == ClipMode::Eager) {
    Message m;
    m.msg_type = MsgType::ClipIndices;
    m.tensor_id = unsent_records_.back().tensor_id;
    append_clip_block(m.payload, take_unsent_records());
    send_message(PartyId::P1, std::move(m));
  }
}

void PartyEngine::park_pending(const SharedTensor& t) {
  if (role_ != PartyId::P1) throw ProtocolError("pending tensors park on p1");
  parked_[t.tensor_id] = t;
  if (cfg_.clip_mode == ClipMode::Eager) {
    Message m = recv_message(PartyId::P0);
    if (m.msg_type != MsgType::ClipIndices)
      throw ProtocolError("expected clip indices");
  }
}

bool PartyEngine::has_unsent_clip(u64 tensor_id) const {
  for (const auto& r : unsent_records_)
    if (r.tensor_id == tensor_id) return true;
  return false;
}

std::vector<ClipRecord> PartyEngine::take_unsent_records() {
  std::vector<ClipRecord> out;
  out.swap(unsent_records_);
  return out;
}

void PartyEngine::apply_clip_records(const std::vector<ClipRecord>& recs) {
  for (const auto& rec : recs) {
    auto it = parked_.find(rec.tensor_id);
    if (it == parked_.end())
      throw ProtocolError("clip record for unknown tensor");
    SharedTensor& t = it->second;
    auto& share = t.vals();
    for (u64 i : rec.indices_overflow) {
      if (i >= share.size()) throw ProtocolError("clip index out of range");
      share[i] = ring_add(share[i], u64(1) << (kRingBits - 2));
    }
    for (u64 i : rec.indices_underflow) {
      if (i >= share.size()) throw ProtocolError("clip index out of range");
      share[i] = ring_sub(share[i], u64(1) << (kRingBits - 2));
    }
    // now safe to drop back to scale p
    truncate_share_inplace(share, fx_);
    if (t.pending_clip) *t.pending_clip = false;
    note_final(t);
    parked_.erase(it);
  }
}

void PartyEngine::materialize(const SharedTensor& t) {
  if (role_ == PartyId::P0) {
    if (has_unsent_clip(t.tensor_id)) {
      std::string save_op = op_name_;
      op_name_ = "clip_flush";
      Message m;
      m.msg_type = MsgType::ClipIndices;
      m.tensor_id = t.tensor_id;
      append_clip_block(m.payload, take_unsent_records());
      send_message(PartyId::P1, std::move(m));
      op_name_ = save_op;
    }
  } else if (role_ == PartyId::P1) {
    while (t.is_pending()) {
      Message m = recv_message(PartyId::P0);
      if (m.msg_type != MsgType::ClipIndices)
        throw ProtocolError("engine out of sync: expected clip flush");
    }
  }
}

void PartyEngine::note_final(const SharedTensor& t) {
  if (monitor_ && t.holds_data()) monitor_->on_final_share(t);
}

u64 payload_bits_of(const Message& m, ClipMode mode, PartyId from,
                    PartyId to) {
  u64 bits = 0;
  size_t pos = 0;
  bool has_block =
      from == PartyId::P0 && to == PartyId::P1 &&
      (mode == ClipMode::Piggyback || m.msg_type == MsgType::ClipIndices);
  if (m.msg_type == MsgType::ClipIndices) has_block = true;
  if (has_block) {
    auto recs = read_clip_block(m.payload, pos);
    for (const auto& r : recs) bits += 64 * r.index_count();
  }
  if (m.msg_type == MsgType::Control || m.msg_type == MsgType::ClipIndices)
    return bits;
  while (pos < m.payload.size()) {
    TensorBlock tb = read_tensor_block(m.payload, pos);
    bits += 64 * tb.elems.size();
  }
  return bits;
}

// --- local session ----------------------------------------------------------

LocalSession::LocalSession(const SessionConfig& cfg) : cfg_(cfg) {
  hub_ = std::make_shared<LocalHub>();
  acct_ = std::make_shared<TrafficAccounting>();
  if (cfg_.debug_checks) {
    FixedPointConfig fx(cfg_.p);
    monitor_ = std::make_shared<DebugMonitor>(cfg_.p, fx.value_bound());
  }
  for (int i = 0; i < 3; i++) {
    auto tr = std::make_shared<LocalTransport>(hub_, static_cast<PartyId>(i));
    engines_[i] = std::make_unique<PartyEngine>(static_cast<PartyId>(i), cfg_,
                                                tr, acct_, monitor_);
  }
}

void LocalSession::run(const std::function<void(PartyEngine&)>& program) {
  std::array<std::exception_ptr, 3> errs{};
  std::array<std::thread, 3> threads;
  for (int i = 0; i < 3; i++) {
    threads[i] = std::thread([&, i] {
      try {
        program(*engines_[i]);
      } catch (...) {
        errs[i] = std::current_exception();
        hub_->close_all();  // unblock peers
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace ssperm
