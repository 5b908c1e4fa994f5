#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace casp {

/// Counter-based 64-bit generator (SplitMix64 finalizer over key + counter).
/// Output depends only on (key, counter), so any draw sequence is reproducible
/// across platforms, runs, and thread counts.
///
/// Stream splitting convention used throughout the harness:
///   master(seed)
///     .substream(block index)
///       .substream(sweep-point index)
///         .substream(replication)      -> one substream per replication
///           .substream(kEnvStream | kLogStream | ...)
/// and one substream per nuisance fold (fold index tag under kFoldStream).
/// Substream keys are derived by hashing, never by sharing counters, so
/// parallel workers each own an independent stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(mix(key ^ 0x6a09e667f3bcc909ULL)) {}

  /// Derives an independent child stream; does not disturb this stream.
  CounterRng substream(std::uint64_t tag) const {
    CounterRng child(0);
    child.key_ = mix(key_ ^ mix(tag + 0x9e3779b97f4a7c15ULL));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    // Multiply-shift; bias is negligible for the small bounds used here.
    const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Inverse-CDF draw from a probability vector (assumed to sum to 1).
  int discrete(std::span<const double> probs) {
    const double u = next_double();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    // Round-off may leave cum fractionally below 1; fall back to the last
    // positive entry so zero-probability cells are never drawn.
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Distinct uniformly random subset of size k from [0, universe), in draw
  /// order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int universe, int k) {
    std::vector<int> pool(static_cast<std::size_t>(universe));
    for (int i = 0; i < universe; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(universe - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Substream tags used by the simulation and application pipelines.
inline constexpr std::uint64_t kEnvStream = 0x01;
inline constexpr std::uint64_t kLogStream = 0x02;
inline constexpr std::uint64_t kFoldStream = 0x03;
inline constexpr std::uint64_t kPerturbStream = 0x04;
inline constexpr std::uint64_t kSplitStream = 0x05;

}  // namespace casp
