#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dycil {

// Error taxonomy; the CLI maps these onto process exit codes
// (config -> 2, data -> 3, numerical -> 4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent sub-stream seed from a master seed and a tag path.
// Each distinct (seed, a, b, c) tuple gives a decorrelated stream, which keeps
// per-snapshot / per-epoch randomness deterministic and order-independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

inline std::uint64_t tag_hash(const std::string& tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace dycil
