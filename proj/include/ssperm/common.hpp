#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ssperm {

using u8 = uint8_t;
using u32 = uint32_t;
using u64 = uint64_t;
using i64 = int64_t;
using u128 = unsigned __int128;

struct OutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FlipIncompatibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LinkClosedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Verbosity from SSPERM_LOG (0 = silent, 1 = info, 2 = debug).
inline int log_level() {
  static int lvl = [] {
    const char* v = std::getenv("SSPERM_LOG");
    return v ? std::atoi(v) : 0;
  }();
  return lvl;
}

}  // namespace ssperm
