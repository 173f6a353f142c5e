#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lidomaug/geometry.hpp"
#include "lidomaug/world_model.hpp"

namespace lidomaug {

/// Deterministic street-like scene around the origin: ground (road 40 /
/// sidewalk 48), building facades (50), parked cars (10) and vegetation (70).
/// Used by the benchmark and tests when no recorded sequence is at hand.
PointCloud synthetic_scene(std::size_t n_points, std::uint64_t seed);

WorldModel synthetic_world(std::size_t n_points, std::uint64_t seed);

/// A straight drive along +x sampling `synthetic_scene` from each pose:
/// frame n keeps the scene points within `radius` of its sensor, in sensor
/// coordinates, labeled. Poses are yaw-only with a slight heading drift.
std::vector<LabeledFrame> synthetic_sequence(std::size_t frames, std::size_t points_per_frame, std::uint64_t seed,
                                             double step = 1.0, double radius = 40.0);

}  // namespace lidomaug
