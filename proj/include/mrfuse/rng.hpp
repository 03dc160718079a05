#ifndef MRFUSE_RNG_HPP
#define MRFUSE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace mrfuse {

/// Counter-based random numbers: every draw is a pure function of
/// (seed, stream keys..., counter), so results do not depend on iteration
/// order or thread scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> streams) : CounterRng(seed) {
    for (auto s : streams) key_ = mix(key_ ^ mix(s + 0x9e3779b97f4a7c15ULL));
  }

  /// Derive an independent child stream.
  CounterRng stream(std::uint64_t id) const {
    CounterRng child(*this);
    child.key_ = mix(key_ ^ mix(id + 0xbb67ae8584caa73bULL));
    return child;
  }

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + mix(counter)); }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const { return lo + (hi - lo) * uniform(counter); }

  /// Standard normal via Box-Muller on two derived counters.
  double normal(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
    // Lemire's multiply-shift; bias is < n / 2^64.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

/// FNV-1a, used to key streams by string identifiers (rater ids, case ids).
inline std::uint64_t hash_id(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mrfuse

#endif  // MRFUSE_RNG_HPP
