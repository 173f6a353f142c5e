#pragma once

#include <optional>

#include "lidomaug/geometry.hpp"
#include "lidomaug/sensor_model.hpp"
#include "lidomaug/world_model.hpp"

namespace lidomaug {

/// Maps every point through T_aug; labels and sources are unchanged.
PointCloud augment_pose(const PointCloud& cloud, const Pose& t_aug);
/// As above, rebuilding the voxel index for the moved points.
WorldModel augment_pose(const WorldModel& world, const Pose& t_aug);

struct RenderOptions {
  /// Applied to each point before projection; equivalent to rendering
  /// augment_pose(cloud, *pose) without materializing it.
  std::optional<Pose> pose;
  /// Threads for the scatter-min. Output is identical for any value.
  unsigned workers = 1;
};

/// Z-buffer render: each pixel keeps the point with the smallest range in
/// (0, max_range]. Exact range ties go to the lower source frame index, then
/// the lower point index. Points outside the vertical FOV are dropped.
RangeMap render(const PointCloud& cloud, const LidarConfig& config, const RenderOptions& options = {});
RangeMap render(const WorldModel& world, const LidarConfig& config, const RenderOptions& options = {});

/// One point per valid pixel, back-projected through the pixel center.
/// Row-major pixel order.
PointCloud extract_cloud(const RangeMap& map);

}  // namespace lidomaug
