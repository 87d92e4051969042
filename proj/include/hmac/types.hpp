#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hmac {

// One tick is one microsecond of simulated time.
using Tick = std::int64_t;

inline constexpr int kNumClasses = 4;

template <class T>
using PerClass = std::array<T, kNumClasses>;

// Service classes double as queue indices: UP (urgent) is queue 0.
enum class ServiceClass : int { UP = 0, HP = 1, MP = 2, LP = 3 };

inline const char* class_name(int cls) {
  static constexpr std::array<const char*, kNumClasses> names{"UP", "HP", "MP", "LP"};
  return (cls >= 0 && cls < kNumClasses) ? names[cls] : "??";
}

enum class Protocol { edca, hmac };

inline const char* protocol_name(Protocol p) { return p == Protocol::edca ? "edca" : "hmac"; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hmac
