#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidomaug/geometry.hpp"

namespace lidomaug {

/// Cylindrical spinning LiDAR. Angles in radians; x forward, y left, z up.
struct LidarConfig {
  int channels = 64;        // H, rows of the range map
  int width = 2048;         // W, columns of the range map
  double fov_up = 0.0;      // top of the vertical field of view (>= 0)
  double fov_down = 0.0;    // bottom of the vertical field of view (<= 0)
  double max_range = 120.0; // meters
  double spin_rate_hz = 20.0;

  double fov() const { return std::abs(fov_up) + std::abs(fov_down); }
  /// Spin angular speed in rad/s.
  double spin_omega() const { return kTwoPi * spin_rate_hz; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(channels) * static_cast<std::size_t>(width); }

  /// Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;

  bool operator==(const LidarConfig&) const = default;
};

/// Named sensor from the built-in table: V64, V32, V16, O64, O128.
LidarConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Parses the key=value sensor description grammar (channels, width,
/// fov_up_deg, fov_down_deg, max_range_m, spin_hz; '#' starts a comment).
LidarConfig parse_sensor_description(std::string_view text);
LidarConfig load_sensor_description(const std::string& path);
std::string format_sensor_description(const LidarConfig& config);

struct Projection {
  double u;  // continuous column in [0, W)
  double v;  // continuous row; [0, H) is inside the vertical FOV
  double r;  // range, meters
};

/// Continuous cylindrical projection. u wraps modulo W. Rejects the origin.
Projection project(const Vec3& point, const LidarConfig& config);

/// Exact inverse of `project` on continuous coordinates. Pass (col + 0.5,
/// row + 0.5) to get the pixel-center ray.
Vec3 back_project(double u, double v, double r, const LidarConfig& config);

struct PixelHit {
  int row;
  int col;
  double range;
};

/// Discrete projection for hot loops. `locate(p)` always agrees with
/// floor(project(p)) (row outside [0, H) -> nullopt); it evaluates polynomial
/// atan/asin and falls back to `project` whenever a result lies within the
/// polynomial error bound of a pixel boundary.
class PixelLocator {
 public:
  explicit PixelLocator(const LidarConfig& config);

  std::optional<PixelHit> locate(const Vec3& p) const;

  static constexpr std::uint32_t kNoPixel = UINT32_MAX;

  /// Batch form of `locate` over pose(points[i]) (or points[i] when `pose` is
  /// null). Writes row * W + col, or kNoPixel, and the range of each point.
  /// Results are identical to calling `locate` point by point.
  void locate_batch(std::span<const Vec3> points, const Pose* pose, std::uint32_t* pixel, double* range) const;

  const LidarConfig& config() const { return config_; }

  // Absolute error bound, in radians, assumed for the polynomial fast paths.
  static constexpr double kAngleErrorBound = 1e-7;

 private:
  std::optional<PixelHit> locate_exact(const Vec3& p) const;

  LidarConfig config_;
  double width_;
  double height_;
  double fov_;
  double col_margin_;
  double row_margin_;
  double sin_min_;
  double sin_max_;
};

/// Pixel-center ray directions, tabulated per column/row so that
/// `direction(row, col) * r` equals back_project(col + .5, row + .5, r).
class PixelRays {
 public:
  explicit PixelRays(const LidarConfig& config);

  Vec3 point(int row, int col, double r) const {
    const double ce = cos_el_[row];
    return Vec3(r * ce * cos_az_[col], r * ce * sin_az_[col], r * sin_el_[row]);
  }

 private:
  std::vector<double> cos_az_, sin_az_, cos_el_, sin_el_;
};

/// Polynomial approximations used by PixelLocator; exposed for testing.
double fast_atan2(double y, double x);
/// Valid for |s| <= 0.5.
double fast_asin(double s);

inline constexpr double kInvalidRange = 0.0;

/// H×W image of the nearest return per pixel plus per-pixel attributes.
/// Row-major. Invalid pixels hold range 0, label 0, intensity 0 and
/// kNoSource / kNoPoint, so two maps compare equal iff their valid content does.
struct RangeMap {
  LidarConfig config;
  std::vector<double> range;
  std::vector<Label> label;
  std::vector<float> intensity;
  std::vector<std::uint32_t> source;
  std::vector<std::uint32_t> point;  // index of the winning point in the rendered cloud
  std::vector<std::uint8_t> valid;

  RangeMap() = default;
  explicit RangeMap(const LidarConfig& config);

  int height() const { return config.channels; }
  int width() const { return config.width; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(config.width) + static_cast<std::size_t>(col);
  }
  std::size_t valid_count() const;

  /// Copies pixel `from` of `other` into pixel `to` of this map.
  void copy_pixel(const RangeMap& other, std::size_t from, std::size_t to) {
    range[to] = other.range[from];
    label[to] = other.label[from];
    intensity[to] = other.intensity[from];
    source[to] = other.source[from];
    point[to] = other.point[from];
    valid[to] = other.valid[from];
  }
  void clear_pixel(std::size_t i);

  /// Checks the valid ⇔ range ∈ (0, max_range] invariant and channel sizes.
  void check_invariants() const;

  bool operator==(const RangeMap&) const = default;
};

}  // namespace lidomaug
