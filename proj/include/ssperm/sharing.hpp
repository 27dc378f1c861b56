#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssperm/prg.hpp"
#include "ssperm/ring.hpp"

namespace ssperm {

enum class PartyId : u8 { P0 = 0, P1 = 1, P2 = 2 };

inline const char* party_name(PartyId p) {
  switch (p) {
    case PartyId::P0: return "p0";
    case PartyId::P1: return "p1";
    case PartyId::P2: return "p2";
  }
  return "?";
}

// One party's additive share of a shaped tensor. Copies alias the same data
// block; protocol-level materialization (clip flush) mutates through it.
// On P2 instances the data block is empty and only the shape is meaningful.
struct SharedTensor {
  std::vector<u64> shape;
  std::shared_ptr<std::vector<u64>> data;
  PartyId owner = PartyId::P0;
  u64 tensor_id = 0;
  // Set while this tensor sits at scale 2^(2p) waiting for the clip
  // adjustment and truncation to be applied (see protocols).
  std::shared_ptr<bool> pending_clip;

  SharedTensor() : data(std::make_shared<std::vector<u64>>()) {}
  SharedTensor(std::vector<u64> shp, std::vector<u64> vals, PartyId own,
               u64 tid = 0)
      : shape(std::move(shp)),
        data(std::make_shared<std::vector<u64>>(std::move(vals))),
        owner(own),
        tensor_id(tid) {
    if (!data->empty() && PlainFixedTensor::numel_of(shape) != data->size())
      throw ShapeMismatchError("share data does not match shape");
  }

  u64 numel() const { return PlainFixedTensor::numel_of(shape); }
  bool holds_data() const { return data && !data->empty(); }
  bool is_pending() const { return pending_clip && *pending_clip; }

  std::vector<u64>& vals() { return *data; }
  const std::vector<u64>& vals() const { return *data; }
};

struct SharePair {
  SharedTensor s0;
  SharedTensor s1;
};

// Share: dealer picks r uniformly, hands out (r, x - r).
inline SharePair share_plain(const PlainFixedTensor& x, CommonPrg& rng,
                             u64 tensor_id = 0) {
  std::vector<u64> r(x.data.size());
  std::vector<u64> rest(x.data.size());
  for (size_t i = 0; i < x.data.size(); i++) {
    r[i] = rng.next_u64();
    rest[i] = ring_sub(x.data[i], r[i]);
  }
  return {SharedTensor(x.shape, std::move(r), PartyId::P0, tensor_id),
          SharedTensor(x.shape, std::move(rest), PartyId::P1, tensor_id)};
}

// Sharing with a caller-forced r (tests).
inline SharePair share_plain_forced(const PlainFixedTensor& x,
                                    const std::vector<u64>& r,
                                    u64 tensor_id = 0) {
  std::vector<u64> rest(x.data.size());
  for (size_t i = 0; i < x.data.size(); i++)
    rest[i] = ring_sub(x.data[i], r[i]);
  return {SharedTensor(x.shape, std::vector<u64>(r), PartyId::P0, tensor_id),
          SharedTensor(x.shape, std::move(rest), PartyId::P1, tensor_id)};
}

inline PlainFixedTensor reconstruct(const SharedTensor& a,
                                    const SharedTensor& b) {
  if (a.shape != b.shape) throw ShapeMismatchError("reconstruct: shape");
  if (a.tensor_id != b.tensor_id)
    throw IdMismatchError("reconstruct: tensor_id");
  std::vector<u64> out(a.vals().size());
  for (size_t i = 0; i < out.size(); i++)
    out[i] = ring_add(a.vals()[i], b.vals()[i]);
  return PlainFixedTensor(a.shape, std::move(out));
}

enum class TripleKind : u8 { Elementwise = 0, MatMul = 1 };

// Dealer-generated multiplication material: u, v uniform with w = u * v
// (elementwise, or the ring matrix product for MatMul triples).
struct BeaverTriple {
  TripleKind kind = TripleKind::Elementwise;
  SharedTensor u, v, w;  // this party's shares
};

// Ring matrix product, row-major: (rows_a x inner) * (inner x cols_b).
inline std::vector<u64> ring_matmul(const std::vector<u64>& a,
                                    const std::vector<u64>& b, size_t rows_a,
                                    size_t inner, size_t cols_b) {
  std::vector<u64> out(rows_a * cols_b, 0);
  for (size_t i = 0; i < rows_a; i++) {
    for (size_t k = 0; k < inner; k++) {
      u64 aik = a[i * inner + k];
      const u64* brow = &b[k * cols_b];
      u64* orow = &out[i * cols_b];
      for (size_t j = 0; j < cols_b; j++) orow[j] += aik * brow[j];
    }
  }
  return out;
}

}  // namespace ssperm
