#pragma once

#include <cstdint>

namespace myopass {

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Child seed for an independent random stream, a pure function of its
/// arguments so results do not depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(parent ^ mix64(stream)) ^ mix64(index + 0x51ED27ull));
}

}  // namespace myopass
