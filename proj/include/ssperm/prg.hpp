#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "ssperm/common.hpp"

namespace ssperm {

// ChaCha20 block function (counter mode). The protocol fixes this algorithm
// so that independent party implementations produce identical streams from
// the same 256-bit seed.
namespace chacha {

inline u32 rotl32(u32 x, int n) { return (x << n) | (x >> (32 - n)); }

inline void quarter_round(u32& a, u32& b, u32& c, u32& d) {
  a += b; d ^= a; d = rotl32(d, 16);
  c += d; b ^= c; b = rotl32(b, 12);
  a += b; d ^= a; d = rotl32(d, 8);
  c += d; b ^= c; b = rotl32(b, 7);
}

// key: 32 bytes, nonce: 12 bytes, block counter: 32-bit. Output 64 bytes.
inline void block(const u8 key[32], const u8 nonce[12], u32 counter,
                  u8 out[64]) {
  u32 st[16];
  st[0] = 0x61707865u;
  st[1] = 0x3320646eu;
  st[2] = 0x79622d32u;
  st[3] = 0x6b206574u;
  for (int i = 0; i < 8; i++) {
    std::memcpy(&st[4 + i], key + 4 * i, 4);
  }
  st[12] = counter;
  for (int i = 0; i < 3; i++) {
    std::memcpy(&st[13 + i], nonce + 4 * i, 4);
  }
  u32 w[16];
  std::memcpy(w, st, sizeof(w));
  for (int round = 0; round < 10; round++) {
    quarter_round(w[0], w[4], w[8], w[12]);
    quarter_round(w[1], w[5], w[9], w[13]);
    quarter_round(w[2], w[6], w[10], w[14]);
    quarter_round(w[3], w[7], w[11], w[15]);
    quarter_round(w[0], w[5], w[10], w[15]);
    quarter_round(w[1], w[6], w[11], w[12]);
    quarter_round(w[2], w[7], w[8], w[13]);
    quarter_round(w[3], w[4], w[9], w[14]);
  }
  for (int i = 0; i < 16; i++) {
    u32 v = w[i] + st[i];
    std::memcpy(out + 4 * i, &v, 4);
  }
}

}  // namespace chacha

// Keyed deterministic u64 stream shared by a party pair. Both endpoints
// advance their counters in lockstep by protocol construction; equal
// (seed, counter) states yield identical words.
class CommonPrg {
 public:
  CommonPrg() { seed_.fill(0); }
  explicit CommonPrg(const std::array<u8, 32>& seed) : seed_(seed) {}

  u64 counter() const { return counter_; }

  u64 next_u64() {
    if (buf_pos_ == kWordsPerBlock) refill();
    counter_++;
    return buf_[buf_pos_++];
  }

  void next_u64s(u64* out, size_t n) {
    for (size_t i = 0; i < n; i++) out[i] = next_u64();
  }

  std::vector<u64> next_u64s(size_t n) {
    std::vector<u64> out(n);
    next_u64s(out.data(), n);
    return out;
  }

  // One unbiased bit per call.
  bool next_bit() {
    if (bit_pos_ == 64) {
      bit_word_ = next_u64();
      bit_pos_ = 0;
    }
    return (bit_word_ >> bit_pos_++) & 1;
  }

  // Uniform draw from [0, bound) via rejection sampling.
  u64 next_below(u64 bound) {
    // largest multiple of bound that fits in 2^64
    u64 limit = 0 - (0 - bound) % bound;  // == 2^64 - (2^64 mod bound)
    for (;;) {
      u64 w = next_u64();
      if (limit == 0 || w < limit) return w % bound;
    }
  }

  // Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr size_t kWordsPerBlock = 8;

  void refill() {
    u8 nonce[12] = {0};
    u8 bytes[64];
    chacha::block(seed_.data(), nonce, block_ctr_++, bytes);
    for (size_t i = 0; i < kWordsPerBlock; i++) {
      std::memcpy(&buf_[i], bytes + 8 * i, 8);
    }
    buf_pos_ = 0;
  }

  std::array<u8, 32> seed_;
  u64 counter_ = 0;
  u32 block_ctr_ = 0;
  std::array<u64, kWordsPerBlock> buf_{};
  size_t buf_pos_ = kWordsPerBlock;
  u64 bit_word_ = 0;
  int bit_pos_ = 64;
};

// Unbiased Fisher-Yates using rejection-sampled indices. perm[i] gives the
// source position of output element i.
inline std::vector<u64> gen_permutation(CommonPrg& prg, size_t n) {
  std::vector<u64> perm(n);
  for (size_t i = 0; i < n; i++) perm[i] = i;
  for (size_t i = n; i > 1; i--) {
    u64 j = prg.next_below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

inline std::vector<u8> gen_mask(CommonPrg& prg, size_t n) {
  std::vector<u8> mask(n);
  for (size_t i = 0; i < n; i++) mask[i] = prg.next_bit() ? 1 : 0;
  return mask;
}

inline std::array<u8, 32> seed_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw ConfigError("seed must be 64 hex chars");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ConfigError("bad hex digit in seed");
  };
  std::array<u8, 32> out{};
  for (size_t i = 0; i < 32; i++) {
    out[i] = static_cast<u8>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  }
  return out;
}

// Seed derivation for auxiliary streams (party-private randomness, data
// generation). Distinct tweaks give independent streams.
inline std::array<u8, 32> derive_seed(const std::array<u8, 32>& base,
                                      u64 tweak) {
  std::array<u8, 32> s = base;
  u8 nonce[12] = {0};
  std::memcpy(nonce, &tweak, 8);
  u8 bytes[64];
  chacha::block(s.data(), nonce, 0xfeedu, bytes);
  std::memcpy(s.data(), bytes, 32);
  return s;
}

inline std::array<u8, 32> seed_from_u64(u64 v) {
  std::array<u8, 32> s{};
  std::memcpy(s.data(), &v, 8);
  return derive_seed(s, 0x5eedu);
}

// Deterministic standard normal sampler (Box-Muller over the PRG stream);
// avoids the implementation-defined std::normal_distribution. Draws from an
// external stream when given one, so the caller's position advances.
class GaussianSampler {
 public:
  explicit GaussianSampler(CommonPrg& prg) : ext_(&prg) {}
  explicit GaussianSampler(u64 seed) : own_(seed_from_u64(seed)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    CommonPrg& p = prg();
    double u1 = p.next_double();
    double u2 = p.next_double();
    while (u1 <= 1e-300) u1 = p.next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double next(double mean, double stddev) { return mean + stddev * next(); }

  CommonPrg& prg() { return ext_ ? *ext_ : own_; }

 private:
  CommonPrg own_;
  CommonPrg* ext_ = nullptr;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssperm
