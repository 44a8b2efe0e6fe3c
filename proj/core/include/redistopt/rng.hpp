#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace redistopt {

/// Deterministic splittable random generator. Every random quantity in the
/// library derives from one 64-bit seed through named splits, so runs are
/// reproducible bit-for-bit regardless of platform C library state.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {}

  /// Child generator whose stream depends only on (seed, name).
  SplitRng split(std::string_view name) const {
    return SplitRng(mix(seed_ ^ fnv1a(name)));
  }

  /// Child generator indexed by an integer (e.g. per iteration or per run).
  SplitRng split(std::uint64_t index) const {
    return SplitRng(mix(seed_ ^ (0x9e3779b97f4a7c15ULL + index)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; draws two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace redistopt
