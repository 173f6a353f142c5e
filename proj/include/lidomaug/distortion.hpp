#pragma once

#include "lidomaug/random.hpp"
#include "lidomaug/sensor_model.hpp"

namespace lidomaug {

/// Constant-velocity platform motion during one sweep.
struct MotionParams {
  double speed = 0.0;               // V, m/s along +x
  double omega = 0.0;               // platform yaw rate, rad/s
  double omega0 = kTwoPi * 20.0;    // sensor spin, rad/s

  static MotionParams from_kmh(double speed_kmh, double omega, double omega0) {
    return {speed_kmh / 3.6, omega, omega0};
  }
  static MotionParams still(const LidarConfig& config) { return {0.0, 0.0, config.spin_omega()}; }

  /// omega0 > 0 and omega0 + omega != 0.
  void validate() const;
  /// (omega0 + omega) / omega0, the column stretch factor.
  double resample_scale() const { return (omega0 + omega) / omega0; }
};

enum class DistortionOrder { kResampleThenTravel, kTravelThenResample };

enum class TravelMode {
  kTranslate,    // move the pixel's 3D point along +x, then re-project
  kRangeOffset,  // add d(u) to the stored range, pixel unchanged
};

struct DistortionOptions {
  DistortionOrder order = DistortionOrder::kResampleThenTravel;
  TravelMode mode = TravelMode::kTranslate;

  bool operator==(const DistortionOptions&) const = default;
};

/// Angle swept since the scan start (column 0), radians.
inline double column_azimuth(double col, int width) { return col * kTwoPi / width; }

/// Distance travelled while the sensor sweeps `azimuth`: V · azimuth / omega0.
inline double travel_distance(double azimuth, const MotionParams& m) { return m.speed * azimuth / m.omega0; }

inline double column_displacement(int col, int width, const MotionParams& m) {
  return travel_distance(column_azimuth(col, width), m);
}

/// Destination of column `col` under the effective spin: floor(col · scale).
/// May fall outside [0, W) (dropped).
long long resampled_column(int col, const MotionParams& m);

/// Rotation-induced distortion: column u moves to floor(u·(ω₀+ω)/ω₀).
/// Uncovered columns stay empty; when several columns land on one, the
/// later-scanned column wins.
RangeMap resample_columns(const RangeMap& map, const MotionParams& m);

/// Translation-induced distortion: every valid pixel is displaced by d(u)
/// (see TravelMode); collisions resolved with the renderer's z-buffer order.
/// Column 0 is never moved.
RangeMap apply_travel(const RangeMap& map, const MotionParams& m, TravelMode mode = TravelMode::kTranslate);

RangeMap distort(const RangeMap& map, const MotionParams& m, const DistortionOptions& options = {});

struct MotionRanges {
  double speed_kmh_min = 0.0;
  double speed_kmh_max = 60.0;
  double yaw_rate_min = -kPi / 8;
  double yaw_rate_max = kPi / 8;
};

/// V ~ U(speed range) km/h converted to m/s; omega ~ U(yaw-rate range) rad/s;
/// omega0 from the spin rate.
MotionParams sample_motion(UniformSource& rng, double spin_rate_hz, const MotionRanges& ranges = {});

}  // namespace lidomaug
