#pragma once

#include <cstdint>

namespace lidomaug {

/// Source of uniform variates in [0, 1]. Samplers take this interface so tests
/// can drive them with degenerate sources that pin the distribution endpoints.
class UniformSource {
 public:
  virtual ~UniformSource() = default;
  virtual double next_unit() = 0;
};

/// SplitMix64 (Steele, Lea & Flood 2014). `stream(seed, id)` derives an
/// independent generator per sampled quantity so that adding a new stream
/// never shifts the values drawn by the existing ones.
class SplitMix64 final : public UniformSource {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) {
    return SplitMix64(mix(seed ^ mix(stream_id + kGolden)));
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  /// 53-bit uniform in [0, 1).
  double next_unit() override { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

/// lo + u (hi - lo); lo == hi is a fixed value.
inline double uniform(UniformSource& rng, double lo, double hi) { return lo + rng.next_unit() * (hi - lo); }

/// Uniform integer in [lo, hi]; u == 1 maps to hi.
inline long long uniform_int(UniformSource& rng, long long lo, long long hi) {
  const auto span = static_cast<double>(hi - lo + 1);
  auto k = static_cast<long long>(rng.next_unit() * span);
  if (k > hi - lo) k = hi - lo;
  return lo + k;
}

}  // namespace lidomaug
