#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lidomaug/geometry.hpp"
#include "lidomaug/random.hpp"
#include "lidomaug/sensor_model.hpp"

namespace testing {

using lidomaug::Label;
using lidomaug::LidarConfig;
using lidomaug::PointCloud;
using lidomaug::Vec3;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("lidomaug_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Reference projection written from the formulas, independent of the
/// library's implementation. Returns continuous (u, v, r).
struct RefProjection {
  double u, v, r;
};

inline RefProjection reference_project(const Vec3& p, const LidarConfig& c) {
  const double r = std::sqrt(p.x() * p.x() + p.y() * p.y() + p.z() * p.z());
  const double f = std::abs(c.fov_up) + std::abs(c.fov_down);
  double u = 0.5 * (1.0 - std::atan2(p.y(), p.x()) / M_PI) * c.width;
  u = std::fmod(u, static_cast<double>(c.width));
  if (u < 0) u += c.width;
  const double v = (1.0 - (std::asin(p.z() / r) - c.fov_down) / f) * c.channels;
  return {u, v, r};
}

inline Vec3 reference_back_project(double u, double v, double r, const LidarConfig& c) {
  const double f = std::abs(c.fov_up) + std::abs(c.fov_down);
  const double az = M_PI * (1.0 - 2.0 * u / c.width);
  const double el = c.fov_up - v / c.channels * f;
  return Vec3(r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el));
}

/// Point at the given azimuth / elevation / range.
inline Vec3 polar(double az, double el, double r) {
  return Vec3(r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el));
}

/// Random config no larger than max_h × max_w.
inline LidarConfig random_config(std::mt19937_64& rng, int max_h, int max_w) {
  std::uniform_int_distribution<int> h(1, max_h), w(1, max_w);
  std::uniform_real_distribution<double> up(0.0, 0.4), down(-0.6, 0.0), range(5.0, 80.0);
  LidarConfig c;
  c.channels = h(rng);
  c.width = w(rng);
  c.fov_up = up(rng);
  c.fov_down = down(rng);
  if (c.fov_up - c.fov_down < 1e-3) c.fov_up += 0.1;
  c.max_range = range(rng);
  return c;
}

/// Random cloud around the origin with a share of duplicated points and
/// shared-ray points so that exact range ties and occlusions occur.
inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent, int n_labels = 20,
                               int n_sources = 4) {
  std::uniform_real_distribution<double> xyz(-extent, extent), unit(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, n_labels - 1), source(0, n_sources - 1);
  PointCloud cloud;
  cloud.reserve(n);
  while (cloud.size() < n) {
    const double pick = unit(rng);
    Vec3 p;
    if (pick < 0.1 && !cloud.empty()) {
      // Exact duplicate of an earlier point.
      p = cloud.points[std::uniform_int_distribution<std::size_t>(0, cloud.size() - 1)(rng)];
    } else if (pick < 0.2 && !cloud.empty()) {
      // Same ray, farther or nearer.
      p = cloud.points[std::uniform_int_distribution<std::size_t>(0, cloud.size() - 1)(rng)] * (0.5 + unit(rng));
    } else {
      p = Vec3(xyz(rng), xyz(rng), 0.3 * xyz(rng));
    }
    if (p.norm() < 1e-6) continue;
    cloud.push_back(p, static_cast<float>(unit(rng)), static_cast<Label>(label(rng)),
                    static_cast<std::uint32_t>(source(rng)));
  }
  return cloud;
}

/// Uniform source that always returns one value.
class ConstantSource final : public lidomaug::UniformSource {
 public:
  explicit ConstantSource(double value) : value_(value) {}
  double next_unit() override { return value_; }

 private:
  double value_;
};

}  // namespace testing
