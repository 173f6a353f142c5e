#include "lidomaug/renderer.hpp"

#include <algorithm>
#include <limits>
#include <span>

#include "lidomaug/error.hpp"
#include "parallel.hpp"

namespace lidomaug {

PointCloud augment_pose(const PointCloud& cloud, const Pose& t_aug) { return transformed(cloud, t_aug); }

WorldModel augment_pose(const WorldModel& world, const Pose& t_aug) {
  return WorldModel::from_cloud(transformed(world.cloud, t_aug), world.voxels.voxel_size());
}

namespace {

struct Depth {
  double range = std::numeric_limits<double>::infinity();
  std::uint32_t winner = kNoPoint;
};

using DepthBuffer = std::vector<Depth>;

/// Strict total order on candidates: range, then source frame, then point id.
inline bool closer(double r, std::uint32_t idx, double best_r, std::uint32_t best_idx,
                   const std::vector<std::uint32_t>& sources) {
  if (r != best_r) return r < best_r;
  if (best_idx == kNoPoint) return true;
  if (sources[idx] != sources[best_idx]) return sources[idx] < sources[best_idx];
  return idx < best_idx;
}

// `buf` has one extra slot past the last pixel that absorbs culled points, so
// the loop runs without data-dependent branches in the common case.
void scatter(const PointCloud& cloud, const PixelLocator& locator, const std::optional<Pose>& pose, std::size_t begin,
             std::size_t end, DepthBuffer& buf) {
  constexpr std::size_t kChunk = 4096;
  const double max_range = locator.config().max_range;
  const auto sink = static_cast<std::uint32_t>(buf.size() - 1);
  std::vector<std::uint32_t> pixel(kChunk);
  std::vector<double> range(kChunk);
  const std::span<const Vec3> points(cloud.points);
  for (std::size_t base = begin; base < end; base += kChunk) {
    const std::size_t n = std::min(kChunk, end - base);
    locator.locate_batch(points.subspan(base, n), pose ? &*pose : nullptr, pixel.data(), range.data());
    for (std::size_t j = 0; j < n; ++j) {
      const double r = range[j];
      const std::uint32_t pix = (pixel[j] == PixelLocator::kNoPixel) | (r > max_range) ? sink : pixel[j];
      const auto idx = static_cast<std::uint32_t>(base + j);
      Depth& d = buf[pix];
      const double cur = d.range;
      if (r == cur) [[unlikely]] {
        if (closer(r, idx, cur, d.winner, cloud.sources)) d.winner = idx;
        continue;
      }
      const bool take = r < cur;
      d.range = take ? r : cur;
      d.winner = take ? idx : d.winner;
    }
  }
}

}  // namespace

RangeMap render(const PointCloud& cloud, const LidarConfig& config, const RenderOptions& options) {
  cloud.check_consistent();
  require(cloud.size() < kNoPoint, "too many points for 32-bit point ids");
  const PixelLocator locator(config);
  RangeMap map(config);
  const std::size_t pixels = config.pixel_count();
  const unsigned workers = std::max(1u, options.workers);

  std::vector<DepthBuffer> buffers;
  buffers.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) buffers.emplace_back(pixels + 1);

  detail::parallel_chunks(workers, cloud.size(), [&](std::size_t begin, std::size_t end, unsigned w) {
    scatter(cloud, locator, options.pose, begin, end, buffers[w]);
  });

  // Merge the per-worker buffers pixel-wise; the order is total so the result
  // does not depend on how points were partitioned.
  detail::parallel_chunks(workers, pixels, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t pix = begin; pix < end; ++pix) {
      double best_r = buffers[0][pix].range;
      std::uint32_t best = buffers[0][pix].winner;
      for (unsigned w = 1; w < workers; ++w) {
        const Depth& d = buffers[w][pix];
        if (d.winner != kNoPoint && closer(d.range, d.winner, best_r, best, cloud.sources)) {
          best_r = d.range;
          best = d.winner;
        }
      }
      if (best == kNoPoint) continue;
      map.range[pix] = best_r;
      map.point[pix] = best;
      map.valid[pix] = 1;
    }
    // Winner attributes are scattered over the cloud; fetch ahead.
    constexpr std::size_t kAhead = 16;
    for (std::size_t pix = begin; pix < end; ++pix) {
      if (pix + kAhead < end) {
        const std::uint32_t next = map.point[pix + kAhead];
        if (next != kNoPoint) {
          __builtin_prefetch(&cloud.labels[next]);
          __builtin_prefetch(&cloud.intensity[next]);
          __builtin_prefetch(&cloud.sources[next]);
        }
      }
      const std::uint32_t best = map.point[pix];
      if (best == kNoPoint) continue;
      map.label[pix] = cloud.labels[best];
      map.intensity[pix] = cloud.intensity[best];
      map.source[pix] = cloud.sources[best];
    }
  });
  return map;
}

RangeMap render(const WorldModel& world, const LidarConfig& config, const RenderOptions& options) {
  require(!world.cloud.empty(), "render: empty world model");
  return render(world.cloud, config, options);
}

PointCloud extract_cloud(const RangeMap& map) {
  PointCloud out;
  if (map.range.empty()) return out;
  const PixelRays rays(map.config);
  out.reserve(map.valid_count());
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      const std::size_t i = map.index(row, col);
      if (!map.valid[i]) continue;
      out.push_back(rays.point(row, col, map.range[i]), map.intensity[i], map.label[i], map.source[i]);
    }
  }
  return out;
}

}  // namespace lidomaug
