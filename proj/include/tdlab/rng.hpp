#pragma once

#include <cstdint>

namespace tdlab {

/// Counter-based random stream.
///
/// Every draw is a pure function of (master seed, trial index, step index,
/// draw slot), so any sample can be regenerated without replaying the
/// stream, and trials never share state. The construction is SplitMix64:
/// the trial index is mixed into a per-trial key, and each (step, slot)
/// counter is pushed through the SplitMix64 finalizer.
class RngStream {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSlotsPerStep = 4;

  RngStream(std::uint64_t seed, std::uint64_t trial)
      : seed_(seed), trial_(trial), key_(mix(seed ^ mix(trial * kGolden + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t trial() const { return trial_; }

  std::uint64_t bits(std::uint64_t step, std::uint64_t slot) const {
    return mix(key_ + (step * kSlotsPerStep + slot + 1) * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform(std::uint64_t step, std::uint64_t slot) const {
    return static_cast<double>(bits(step, slot) >> 11) * 0x1.0p-53;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t trial_;
  std::uint64_t key_;
};

}  // namespace tdlab
