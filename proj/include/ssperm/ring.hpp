#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ssperm/common.hpp"

namespace ssperm {

// All arithmetic lives in Z_{2^64}; uint64 overflow already wraps correctly.
// Signed view is plain two's complement.

inline constexpr int kRingBits = 64;

// A ring element is a plain 64-bit word; the signed view is two's
// complement, so negative x is stored as 2^64 - |x|.
using RingElement = u64;

inline u64 ring_add(u64 a, u64 b) { return a + b; }
inline u64 ring_sub(u64 a, u64 b) { return a - b; }
inline u64 ring_mul(u64 a, u64 b) { return a * b; }
inline u64 ring_neg(u64 a) { return 0 - a; }

inline i64 ring_signed(u64 a) { return static_cast<i64>(a); }
inline u64 ring_from_signed(i64 a) { return static_cast<u64>(a); }

// Fixed-point layout: p fractional bits inside a 64-bit ring word.
// Application values must stay below 2^(64-2-p) so that products at scale
// 2^(2p) fit the truncation precondition.
struct FixedPointConfig {
  int p = 23;

  FixedPointConfig() = default;
  explicit FixedPointConfig(int frac_bits) : p(frac_bits) {
    if (p < 1 || p > 40) throw ConfigError("fractional bits must be in [1,40]");
  }

  double value_bound() const { return std::ldexp(1.0, kRingBits - 2 - p); }
  u64 scale() const { return u64(1) << p; }
};

inline u64 encode(double x, const FixedPointConfig& cfg) {
  if (!(std::fabs(x) < cfg.value_bound()))
    throw OutOfRangeError("encode: value exceeds fixed-point range");
  // round half away from zero
  double scaled = std::ldexp(x, cfg.p);
  i64 r = static_cast<i64>(scaled >= 0 ? std::floor(scaled + 0.5)
                                       : std::ceil(scaled - 0.5));
  return ring_from_signed(r);
}

inline double decode(u64 r, const FixedPointConfig& cfg) {
  return std::ldexp(static_cast<double>(ring_signed(r)), -cfg.p);
}

// Round-to-nearest (half away from zero) of signed(r) / 2^p, re-embedded.
inline u64 truncate_plain(u64 r, const FixedPointConfig& cfg) {
  i64 s = ring_signed(r);
  u64 mag = s < 0 ? (0 - static_cast<u64>(s)) : static_cast<u64>(s);
  u64 half = u64(1) << (cfg.p - 1);
  u64 q = (mag + half) >> cfg.p;
  return s < 0 ? ring_neg(q) : q;
}

inline void truncate_share_inplace(std::vector<u64>& share,
                                   const FixedPointConfig& cfg) {
  for (auto& v : share) v = truncate_plain(v, cfg);
}

// Shape-carrying container of ring words; the plaintext oracle side of the
// protocol tests.
struct PlainFixedTensor {
  std::vector<u64> shape;
  std::vector<u64> data;

  PlainFixedTensor() = default;
  PlainFixedTensor(std::vector<u64> shp, std::vector<u64> d)
      : shape(std::move(shp)), data(std::move(d)) {
    if (numel_of(shape) != data.size())
      throw ShapeMismatchError("tensor data does not match shape");
  }

  static u64 numel_of(const std::vector<u64>& shp) {
    u64 n = 1;
    for (u64 d : shp) n *= d;
    return n;
  }
  u64 numel() const { return data.size(); }
};

inline PlainFixedTensor encode_tensor(const std::vector<u64>& shape,
                                      const std::vector<double>& vals,
                                      const FixedPointConfig& cfg) {
  std::vector<u64> data(vals.size());
  for (size_t i = 0; i < vals.size(); i++) data[i] = encode(vals[i], cfg);
  return PlainFixedTensor(shape, std::move(data));
}

inline std::vector<double> decode_tensor(const PlainFixedTensor& t,
                                         const FixedPointConfig& cfg) {
  std::vector<double> out(t.data.size());
  for (size_t i = 0; i < t.data.size(); i++) out[i] = decode(t.data[i], cfg);
  return out;
}

}  // namespace ssperm
