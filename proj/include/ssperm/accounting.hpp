#pragma once

#include <array>
#include <mutex>
#include <string>
#include <vector>

#include "ssperm/common.hpp"
#include "ssperm/sharing.hpp"

namespace ssperm {

// Directed link index: 6 ordered party pairs.
inline int link_index(PartyId from, PartyId to) {
  static constexpr int table[3][3] = {{-1, 0, 1}, {2, -1, 3}, {4, 5, -1}};
  int idx = table[static_cast<int>(from)][static_cast<int>(to)];
  if (idx < 0) throw ProtocolError("no self link");
  return idx;
}

inline std::pair<PartyId, PartyId> link_parties(int idx) {
  static constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {1, 0},
                                      {1, 2}, {2, 0}, {2, 1}};
  return {static_cast<PartyId>(pairs[idx][0]),
          static_cast<PartyId>(pairs[idx][1])};
}

struct LinkStats {
  // payload_bits counts tensor elements and clip indices only (64 bits
  // each); headers and shape metadata land in raw_bytes alone. This is what
  // keeps the counters comparable to N*L traffic formulas.
  u64 payload_bits = 0;
  u64 raw_bytes = 0;
  u64 flights = 0;
  u64 offline_payload_bits = 0;  // subset of payload_bits from triple dealing

  LinkStats& operator+=(const LinkStats& o) {
    payload_bits += o.payload_bits;
    raw_bytes += o.raw_bytes;
    flights += o.flights;
    offline_payload_bits += o.offline_payload_bits;
    return *this;
  }
};

struct OpRecord {
  std::string name;
  u64 op_id = 0;
  u64 rounds = 0;  // longest chain of causally dependent flights
  std::array<LinkStats, 6> links{};

  u64 total_payload_bits() const {
    u64 s = 0;
    for (const auto& l : links) s += l.payload_bits;
    return s;
  }
  u64 total_flights() const {
    u64 s = 0;
    for (const auto& l : links) s += l.flights;
    return s;
  }
};

// Static reference table: competitor cost formulas for a single ReLU
// evaluation, kept alongside measured numbers for report rendering.
struct ProtocolCostRow {
  const char* protocol;
  const char* rounds;
  const char* bits;
};

inline const std::vector<ProtocolCostRow>& reference_cost_table() {
  static const std::vector<ProtocolCostRow> rows = {
      {"ours", "3", "3L"},
      {"securenn", "11", "8L log p + 32L + 2"},
      {"aby3", "6 + log L", "105L"},
      {"trident", "7", "16L + 64"},
      {"gc", "4", "k(3L - 1)"},
  };
  return rows;
}

// Session-wide traffic ledger. In local-sim one instance is shared by the
// three engines; over TCP each process keeps its own view of its links.
class TrafficAccounting {
 public:
  void record_flight(PartyId from, PartyId to, u64 payload_bits, u64 raw_bytes,
                     bool offline, u64 op_id, const std::string& op_name,
                     u64 depth, u64 transcript_hash) {
    std::lock_guard<std::mutex> lk(mu_);
    int li = link_index(from, to);
    totals_[li].payload_bits += payload_bits;
    totals_[li].raw_bytes += raw_bytes;
    totals_[li].flights += 1;
    if (offline) totals_[li].offline_payload_bits += payload_bits;
    OpRecord& rec = op_record(op_id, op_name);
    rec.links[li].payload_bits += payload_bits;
    rec.links[li].raw_bytes += raw_bytes;
    rec.links[li].flights += 1;
    if (offline) rec.links[li].offline_payload_bits += payload_bits;
    if (depth > rec.rounds) rec.rounds = depth;
    // order-sensitive rolling hash per link (FNV-1a over message bytes)
    link_hash_[li] = (link_hash_[li] ^ transcript_hash) * 0x100000001b3ull + 1;
  }

  std::array<LinkStats, 6> link_totals() const {
    std::lock_guard<std::mutex> lk(mu_);
    return totals_;
  }

  LinkStats link(PartyId from, PartyId to) const {
    std::lock_guard<std::mutex> lk(mu_);
    return totals_[link_index(from, to)];
  }

  std::vector<OpRecord> op_records() const {
    std::lock_guard<std::mutex> lk(mu_);
    return ops_;
  }

  // Aggregate of all ops with the given name.
  OpRecord op_aggregate(const std::string& name) const {
    std::lock_guard<std::mutex> lk(mu_);
    OpRecord agg;
    agg.name = name;
    for (const auto& r : ops_) {
      if (r.name != name) continue;
      for (int i = 0; i < 6; i++) agg.links[i] += r.links[i];
      if (r.rounds > agg.rounds) agg.rounds = r.rounds;
    }
    return agg;
  }

  std::array<u64, 6> link_hashes() const {
    std::lock_guard<std::mutex> lk(mu_);
    return link_hash_;
  }

  u64 total_payload_bits() const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (const auto& l : totals_) s += l.payload_bits;
    return s;
  }

  u64 total_raw_bytes() const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (const auto& l : totals_) s += l.raw_bytes;
    return s;
  }

 private:
  OpRecord& op_record(u64 op_id, const std::string& name) {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      if (it->op_id == op_id) return *it;
    }
    ops_.push_back(OpRecord{name, op_id, 0, {}});
    return ops_.back();
  }

  mutable std::mutex mu_;
  std::array<LinkStats, 6> totals_{};
  std::array<u64, 6> link_hash_{};
  std::vector<OpRecord> ops_;
};

inline u64 fnv1a(const u8* data, size_t n) {
  u64 h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; i++) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ssperm
