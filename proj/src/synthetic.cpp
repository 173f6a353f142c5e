#include "lidomaug/synthetic.hpp"

#include <cmath>

#include "lidomaug/random.hpp"

namespace lidomaug {

namespace {

constexpr Label kCar = 10;
constexpr Label kRoad = 40;
constexpr Label kSidewalk = 48;
constexpr Label kBuilding = 50;
constexpr Label kVegetation = 70;

constexpr double kGroundZ = -1.73;

}  // namespace

PointCloud synthetic_scene(std::size_t n_points, std::uint64_t seed) {
  auto rng = SplitMix64::stream(seed, 0x5ce4e);
  PointCloud cloud;
  cloud.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double pick = rng.next_unit();
    Vec3 p;
    Label label;
    if (pick < 0.45) {
      // Ground within 60 m, road band |y| < 6 m.
      const double x = uniform(rng, -60.0, 60.0);
      const double y = uniform(rng, -20.0, 20.0);
      p = Vec3(x, y, kGroundZ + uniform(rng, -0.02, 0.02));
      label = std::abs(y) < 6.0 ? kRoad : kSidewalk;
    } else if (pick < 0.75) {
      // Facades on both sides of the street.
      const double side = rng.next_unit() < 0.5 ? -1.0 : 1.0;
      p = Vec3(uniform(rng, -60.0, 60.0), side * (12.0 + uniform(rng, 0.0, 0.1)), uniform(rng, kGroundZ, 10.0));
      label = kBuilding;
    } else if (pick < 0.9) {
      // Parked cars every 8 m along the curb.
      const double slot = std::floor(uniform(rng, -7.0, 7.0));
      const double side = rng.next_unit() < 0.5 ? -1.0 : 1.0;
      p = Vec3(slot * 8.0 + uniform(rng, -2.0, 2.0), side * (7.5 + uniform(rng, -0.8, 0.8)),
               kGroundZ + uniform(rng, 0.2, 1.5));
      label = kCar;
    } else {
      // Tree crowns.
      const double slot = std::floor(uniform(rng, -6.0, 6.0));
      const double side = rng.next_unit() < 0.5 ? -1.0 : 1.0;
      const double az = uniform(rng, 0.0, kTwoPi);
      const double el = uniform(rng, -1.2, 1.2);
      const double rad = 1.5 * std::cbrt(rng.next_unit());
      p = Vec3(slot * 10.0 + 5.0 + rad * std::cos(el) * std::cos(az),
               side * 10.0 + rad * std::cos(el) * std::sin(az), 3.0 + rad * std::sin(el));
      label = kVegetation;
    }
    cloud.push_back(p, static_cast<float>(rng.next_unit()), label, 0);
  }
  return cloud;
}

WorldModel synthetic_world(std::size_t n_points, std::uint64_t seed) {
  return WorldModel::from_cloud(synthetic_scene(n_points, seed));
}

std::vector<LabeledFrame> synthetic_sequence(std::size_t frames, std::size_t points_per_frame, std::uint64_t seed,
                                             double step, double radius) {
  const PointCloud scene = synthetic_scene(points_per_frame * 6, seed);
  std::vector<LabeledFrame> out;
  out.reserve(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    LabeledFrame frame;
    frame.time_index = static_cast<std::int64_t>(n);
    frame.pose = Pose::from_yaw(0.01 * static_cast<double>(n), Vec3(step * static_cast<double>(n) - 0.5 * step * frames, 0.3, 0.0));
    const Pose to_sensor = frame.pose.inverse();
    auto pick = SplitMix64::stream(seed, 0x1000 + n);
    for (std::size_t i = 0; i < scene.size() && frame.cloud.size() < points_per_frame; ++i) {
      if (pick.next_unit() < 0.5) continue;
      const Vec3 local = to_sensor.apply(scene.points[i]);
      if (local.norm() > radius || local.norm() < 1.0) continue;
      frame.cloud.push_back(local, scene.intensity[i], scene.labels[i], 0);
    }
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace lidomaug
