#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tecorridor {

/// Seeded random stream. The draw helpers are written out here rather than
/// using the std distributions, whose output is implementation-defined, so
/// that snapshots stay byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}

  /// Derives an independent stream from several words (e.g. seed + purpose tag).
  Rng(std::initializer_list<std::uint64_t> words) {
    std::vector<std::uint32_t> halves;
    for (auto w : words) {
      halves.push_back(static_cast<std::uint32_t>(w));
      halves.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq s(halves.begin(), halves.end());
    engine_.seed(s);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int index(int n) {
    const auto range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % range);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tecorridor
