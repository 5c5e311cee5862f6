#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace grec {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over `bytes`; a nonzero `seed` perturbs the offset basis.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0) {
  std::uint64_t h = kFnvOffset ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= kFnvPrime;
    }
  }
  void update(double v) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    update(std::string_view(buf, sizeof(buf)));
  }
  void update(std::uint64_t v) {
    char buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    update(std::string_view(buf, sizeof(buf)));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = kFnvOffset;
};

}  // namespace grec
