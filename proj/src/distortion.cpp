#include "lidomaug/distortion.hpp"

#include <cmath>
#include <limits>

#include "lidomaug/error.hpp"

namespace lidomaug {

void MotionParams::validate() const {
  require(std::isfinite(speed) && std::isfinite(omega) && std::isfinite(omega0), "motion parameters must be finite");
  require(omega0 > 0.0, "spin angular speed must be positive");
  require(omega0 + omega != 0.0, "effective angular speed omega0 + omega must be non-zero");
}

long long resampled_column(int col, const MotionParams& m) {
  return static_cast<long long>(std::floor(col * m.resample_scale()));
}

RangeMap resample_columns(const RangeMap& map, const MotionParams& m) {
  m.validate();
  if (m.omega == 0.0) return map;
  const int width = map.width();
  // Source column for each destination; ascending source order so that
  // later-scanned columns overwrite earlier ones.
  std::vector<int> from(static_cast<std::size_t>(width), -1);
  for (int col = 0; col < width; ++col) {
    const long long dst = resampled_column(col, m);
    if (dst >= 0 && dst < width) from[static_cast<std::size_t>(dst)] = col;
  }
  RangeMap out(map.config);
  for (int row = 0; row < map.height(); ++row) {
    for (int dst = 0; dst < width; ++dst) {
      const int src = from[static_cast<std::size_t>(dst)];
      if (src >= 0) out.copy_pixel(map, map.index(row, src), map.index(row, dst));
    }
  }
  return out;
}

RangeMap apply_travel(const RangeMap& map, const MotionParams& m, TravelMode mode) {
  m.validate();
  if (m.speed == 0.0) return map;

  const LidarConfig& config = map.config;
  const PixelLocator locator(config);
  const PixelRays rays(config);
  const std::size_t pixels = config.pixel_count();

  std::vector<double> best_range(pixels, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_from(pixels, pixels);

  auto offer = [&](std::size_t to, double r, std::size_t from) {
    const std::size_t cur = best_from[to];
    bool better;
    if (cur == pixels || r != best_range[to]) {
      better = r < best_range[to];
    } else if (map.source[from] != map.source[cur]) {
      better = map.source[from] < map.source[cur];
    } else if (map.point[from] != map.point[cur]) {
      better = map.point[from] < map.point[cur];
    } else {
      better = from < cur;
    }
    if (better) {
      best_range[to] = r;
      best_from[to] = from;
    }
  };

  std::vector<Vec3> moved;
  std::vector<std::size_t> moved_from;
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      const std::size_t i = map.index(row, col);
      if (!map.valid[i]) continue;
      const double r = map.range[i];
      const double d = column_displacement(col, config.width, m);
      if (d == 0.0) {
        offer(i, r, i);
        continue;
      }
      if (mode == TravelMode::kRangeOffset) {
        const double shifted = r + d;
        if (shifted > 0.0 && shifted <= config.max_range) offer(i, shifted, i);
        continue;
      }
      Vec3 p = rays.point(row, col, r);
      p.x() += d;
      moved.push_back(p);
      moved_from.push_back(i);
    }
  }

  // The order is total, so offering the re-projected points after the
  // unmoved ones gives the same winners as any other order.
  std::vector<std::uint32_t> pixel(moved.size());
  std::vector<double> range(moved.size());
  locator.locate_batch(moved, nullptr, pixel.data(), range.data());
  for (std::size_t k = 0; k < moved.size(); ++k) {
    if (pixel[k] == PixelLocator::kNoPixel || range[k] > config.max_range) continue;
    offer(pixel[k], range[k], moved_from[k]);
  }

  RangeMap out(config);
  for (std::size_t to = 0; to < pixels; ++to) {
    if (best_from[to] == pixels) continue;
    out.copy_pixel(map, best_from[to], to);
    out.range[to] = best_range[to];
  }
  return out;
}

RangeMap distort(const RangeMap& map, const MotionParams& m, const DistortionOptions& options) {
  m.validate();
  if (map.valid_count() == 0) return map;
  if (options.order == DistortionOrder::kResampleThenTravel) {
    return apply_travel(resample_columns(map, m), m, options.mode);
  }
  return resample_columns(apply_travel(map, m, options.mode), m);
}

MotionParams sample_motion(UniformSource& rng, double spin_rate_hz, const MotionRanges& ranges) {
  require(ranges.speed_kmh_min <= ranges.speed_kmh_max && ranges.yaw_rate_min <= ranges.yaw_rate_max,
          "motion ranges must satisfy min <= max");
  require(spin_rate_hz > 0.0, "spin rate must be positive");
  MotionParams m;
  m.speed = uniform(rng, ranges.speed_kmh_min, ranges.speed_kmh_max) / 3.6;
  m.omega = uniform(rng, ranges.yaw_rate_min, ranges.yaw_rate_max);
  m.omega0 = kTwoPi * spin_rate_hz;
  m.validate();
  return m;
}

}  // namespace lidomaug
