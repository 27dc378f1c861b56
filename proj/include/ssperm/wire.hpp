#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "ssperm/common.hpp"

namespace ssperm {

enum class MsgType : u8 {
  TensorShares = 1,
  ClipIndices = 2,
  TripleShare = 3,
  PermutedShares = 4,
  ReshareResult = 5,
  OpenValue = 6,
  Control = 7,
};

struct Message {
  MsgType msg_type = MsgType::Control;
  u32 session_id = 0;
  u64 tensor_id = 0;
  std::vector<u8> payload;
};

inline constexpr char kWireMagic[4] = {'S', 'S', 'R', 'P'};
inline constexpr u8 kWireVersion = 1;
inline constexpr size_t kWireHeaderBytes = 4 + 1 + 1 + 4 + 8 + 8;

inline void put_u64_le(std::vector<u8>& buf, u64 v) {
  for (int i = 0; i < 8; i++) buf.push_back(static_cast<u8>(v >> (8 * i)));
}
inline void put_u32_le(std::vector<u8>& buf, u32 v) {
  for (int i = 0; i < 4; i++) buf.push_back(static_cast<u8>(v >> (8 * i)));
}
inline u64 get_u64_le(const u8* p) {
  u64 v = 0;
  for (int i = 0; i < 8; i++) v |= static_cast<u64>(p[i]) << (8 * i);
  return v;
}
inline u32 get_u32_le(const u8* p) {
  u32 v = 0;
  for (int i = 0; i < 4; i++) v |= static_cast<u32>(p[i]) << (8 * i);
  return v;
}

inline std::vector<u8> encode_message(const Message& m) {
  std::vector<u8> buf;
  buf.reserve(kWireHeaderBytes + m.payload.size());
  buf.insert(buf.end(), kWireMagic, kWireMagic + 4);
  buf.push_back(kWireVersion);
  buf.push_back(static_cast<u8>(m.msg_type));
  put_u32_le(buf, m.session_id);
  put_u64_le(buf, m.tensor_id);
  put_u64_le(buf, m.payload.size());
  buf.insert(buf.end(), m.payload.begin(), m.payload.end());
  return buf;
}

inline Message decode_message(const u8* data, size_t len) {
  if (len < kWireHeaderBytes) throw DecodeError("message too short");
  if (std::memcmp(data, kWireMagic, 4) != 0)
    throw DecodeError("bad message magic");
  if (data[4] != kWireVersion) throw DecodeError("bad message version");
  Message m;
  m.msg_type = static_cast<MsgType>(data[5]);
  m.session_id = get_u32_le(data + 6);
  m.tensor_id = get_u64_le(data + 10);
  u64 plen = get_u64_le(data + 18);
  if (len != kWireHeaderBytes + plen) throw DecodeError("bad payload length");
  m.payload.assign(data + kWireHeaderBytes, data + len);
  return m;
}

inline Message decode_message(const std::vector<u8>& bytes) {
  return decode_message(bytes.data(), bytes.size());
}

// Tensor block: ndim (u8), dims (u64 LE each), elements (u64 LE, row-major).
inline void append_tensor_block(std::vector<u8>& buf,
                                const std::vector<u64>& shape,
                                const std::vector<u64>& elems) {
  buf.push_back(static_cast<u8>(shape.size()));
  for (u64 d : shape) put_u64_le(buf, d);
  size_t off = buf.size();
  buf.resize(off + 8 * elems.size());
  for (size_t i = 0; i < elems.size(); i++) {
    u64 v = elems[i];
    for (int b = 0; b < 8; b++)
      buf[off + 8 * i + b] = static_cast<u8>(v >> (8 * b));
  }
}

struct TensorBlock {
  std::vector<u64> shape;
  std::vector<u64> elems;
};

inline TensorBlock read_tensor_block(const std::vector<u8>& buf,
                                     size_t& pos) {
  if (pos >= buf.size()) throw DecodeError("tensor block: truncated");
  u8 ndim = buf[pos++];
  TensorBlock tb;
  tb.shape.resize(ndim);
  u64 count = 1;
  for (int i = 0; i < ndim; i++) {
    if (pos + 8 > buf.size()) throw DecodeError("tensor block: truncated dims");
    tb.shape[i] = get_u64_le(buf.data() + pos);
    pos += 8;
    count *= tb.shape[i];
  }
  if (pos + 8 * count > buf.size())
    throw DecodeError("tensor block: truncated elements");
  tb.elems.resize(count);
  for (u64 i = 0; i < count; i++) {
    tb.elems[i] = get_u64_le(buf.data() + pos);
    pos += 8;
  }
  return tb;
}

// Clip-adjustment block carried P0 -> P1: records of (tensor_id,
// overflow count, underflow count, overflow indices, underflow indices).
struct ClipRecord {
  u64 tensor_id = 0;
  std::vector<u64> indices_overflow;
  std::vector<u64> indices_underflow;

  u64 index_count() const {
    return indices_overflow.size() + indices_underflow.size();
  }
};

inline void append_clip_block(std::vector<u8>& buf,
                              const std::vector<ClipRecord>& records) {
  put_u64_le(buf, records.size());
  for (const auto& r : records) {
    put_u64_le(buf, r.tensor_id);
    put_u64_le(buf, r.indices_overflow.size());
    put_u64_le(buf, r.indices_underflow.size());
    for (u64 i : r.indices_overflow) put_u64_le(buf, i);
    for (u64 i : r.indices_underflow) put_u64_le(buf, i);
  }
}

inline std::vector<ClipRecord> read_clip_block(const std::vector<u8>& buf,
                                               size_t& pos) {
  auto need = [&](size_t n) {
    if (pos + n > buf.size()) throw DecodeError("clip block: truncated");
  };
  need(8);
  u64 nrec = get_u64_le(buf.data() + pos);
  pos += 8;
  std::vector<ClipRecord> out(nrec);
  for (u64 k = 0; k < nrec; k++) {
    need(24);
    out[k].tensor_id = get_u64_le(buf.data() + pos);
    u64 nover = get_u64_le(buf.data() + pos + 8);
    u64 nunder = get_u64_le(buf.data() + pos + 16);
    pos += 24;
    need(8 * (nover + nunder));
    out[k].indices_overflow.resize(nover);
    for (u64 i = 0; i < nover; i++) {
      out[k].indices_overflow[i] = get_u64_le(buf.data() + pos);
      pos += 8;
    }
    out[k].indices_underflow.resize(nunder);
    for (u64 i = 0; i < nunder; i++) {
      out[k].indices_underflow[i] = get_u64_le(buf.data() + pos);
      pos += 8;
    }
  }
  return out;
}

}  // namespace ssperm
