#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidomaug/distortion.hpp"
#include "lidomaug/mixer.hpp"
#include "lidomaug/random.hpp"
#include "lidomaug/renderer.hpp"
#include "lidomaug/sensor_model.hpp"
#include "lidomaug/world_model.hpp"

namespace lidomaug {

/// Every random quantity of one augmentation. Angles in radians, lengths in
/// meters, speed in km/h. Defaults are the standard training ranges.
struct AugmentSpec {
  std::uint64_t seed = 0;

  std::vector<int> width_choices{1024, 2048};
  int channels_min = 16;
  int channels_max = 128;
  double fov_up_min = 0.0;
  double fov_up_max = kPi / 12;
  double fov_down_min = -kPi / 6;
  double fov_down_max = 0.0;
  double max_range = 120.0;
  double spin_hz = 20.0;
  /// When set, no sensor configuration is sampled.
  std::optional<LidarConfig> fixed_config;

  double yaw_min = -kPi / 6;
  double yaw_max = kPi / 6;
  double tx_min = -1.0, tx_max = 1.0;
  double ty_min = -0.5, ty_max = 0.5;
  double tz_min = -0.1, tz_max = 0.1;

  double speed_kmh_min = 0.0;
  double speed_kmh_max = 60.0;
  double yaw_rate_min = -kPi / 8;
  double yaw_rate_max = kPi / 8;

  std::size_t n_mix = 2;
  DistortionOptions distortion;

  void validate() const;
  MotionRanges motion_ranges() const;
  /// Collapses pose and motion ranges to zero (identity pose, no motion).
  void make_identity();

  bool operator==(const AugmentSpec&) const = default;
};

/// key = value grammar; keys mirror the field names (fixed config given as
/// `sensor_preset = V32`, distortion as `distortion_order` / `travel_mode`).
AugmentSpec parse_augment_spec(std::string_view text, AugmentSpec base = {});
AugmentSpec load_augment_spec(const std::string& path, AugmentSpec base = {});
std::string format_augment_spec(const AugmentSpec& spec);

std::uint64_t parse_seed(std::string_view text);
/// LIDOMAUG_SEED, if set.
std::optional<std::uint64_t> environment_seed();

/// Stream ids for SplitMix64::stream; one per sampled quantity.
namespace streams {
inline constexpr std::uint64_t kConfig = 1;
inline constexpr std::uint64_t kSectors = 2;
inline constexpr std::uint64_t kPoseBase = 0x100;
inline constexpr std::uint64_t kMotionBase = 0x200;
}  // namespace streams

/// Draws in order: width choice, channel count, fov_up, fov_down.
LidarConfig sample_config(const AugmentSpec& spec, UniformSource& rng);
/// Draws in order: yaw, tx, ty, tz. R = R_z(yaw).
Pose sample_pose(const AugmentSpec& spec, UniformSource& rng);

using WorldRef = std::reference_wrapper<const WorldModel>;

struct AugmentResult {
  PointCloud cloud;
  RangeMap map;
  LidarConfig config;
  std::vector<Pose> poses;
  std::vector<MotionParams> motions;
  std::vector<Sector> sectors;
  double latency_ms = 0.0;  // wall time of this call; not part of the output data
};

struct AugmentOptions {
  unsigned workers = 1;
};

/// Samples one target config; renders, distorts and mixes the first n_mix
/// worlds under independently sampled poses and motions; back-projects the
/// mix. A pure function of (worlds, spec).
AugmentResult augment(std::span<const WorldRef> worlds, const AugmentSpec& spec, const AugmentOptions& options = {});
AugmentResult augment(std::span<const WorldModel> worlds, const AugmentSpec& spec, const AugmentOptions& options = {});

}  // namespace lidomaug
