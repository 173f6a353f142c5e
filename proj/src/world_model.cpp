#include "lidomaug/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lidomaug/error.hpp"

namespace lidomaug {

bool OrientedBox::contains(const Vec3& p) const {
  const double dx = p.x() - center.x();
  const double dy = p.y() - center.y();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  // Rotate into the box frame by -yaw.
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double lz = p.z() - center.z();
  return std::abs(lx) <= half_extents.x() && std::abs(ly) <= half_extents.y() && std::abs(lz) <= half_extents.z();
}

void BoxTrack::validate() const {
  require(!entries.empty(), "track " + std::to_string(object_id) + " has no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    require(e.box.half_extents.allFinite() && e.box.volume() > 0.0 && (e.box.half_extents.array() > 0.0).all(),
            "track " + std::to_string(object_id) + " frame " + std::to_string(e.frame) + ": box has zero volume");
    if (i > 0) {
      require(e.frame > entries[i - 1].frame,
              "track " + std::to_string(object_id) + ": frame indices must be strictly increasing");
      require(e.frame == entries[i - 1].frame + 1,
              "track " + std::to_string(object_id) + ": frame indices must be contiguous");
    }
  }
}

// ---------------------------------------------------------------------------
// Voxels

VoxelKey VoxelIndex::key_of(const Vec3& p) const {
  auto axis = [this](double c) {
    const double k = std::floor(c / voxel_size_);
    require(std::abs(k) < 2147483647.0, "point coordinate outside the voxel grid range");
    return static_cast<std::int32_t>(k);
  };
  return {axis(p.x()), axis(p.y()), axis(p.z())};
}

std::optional<std::size_t> VoxelIndex::find(const VoxelKey& key) const {
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

Label modal_label(std::span<const Label> labels) {
  std::vector<Label> sorted;
  sorted.reserve(labels.size());
  for (Label l : labels) {
    if (l != kUnlabeled) sorted.push_back(l);
  }
  if (sorted.empty()) return kUnlabeled;
  std::sort(sorted.begin(), sorted.end());
  Label best = sorted.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (j - i > best_count) {  // strict: an earlier (smaller) id keeps the tie
      best_count = j - i;
      best = sorted[i];
    }
    i = j;
  }
  return best;
}

VoxelIndex VoxelIndex::build(std::span<const Vec3> points, std::span<const Label> labels, double voxel_size) {
  require(voxel_size > 0.0, "voxel size must be positive");
  require(points.size() == labels.size(), "voxel index: points/labels size mismatch");
  require(points.size() < kNoPoint, "too many points for 32-bit point ids");
  VoxelIndex index;
  index.voxel_size_ = voxel_size;

  std::vector<VoxelKey> point_keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) point_keys[i] = index.key_of(points[i]);

  std::vector<std::uint32_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto c = point_keys[a] <=> point_keys[b];
    return c != 0 ? c < 0 : a < b;
  });

  index.members_ = std::move(order);
  std::vector<Label> scratch;
  for (std::size_t i = 0; i < index.members_.size();) {
    const VoxelKey key = point_keys[index.members_[i]];
    std::size_t j = i;
    scratch.clear();
    while (j < index.members_.size() && point_keys[index.members_[j]] == key) {
      scratch.push_back(labels[index.members_[j]]);
      ++j;
    }
    index.keys_.push_back(key);
    index.representatives_.push_back(modal_label(scratch));
    index.offsets_.push_back(j);
    i = j;
  }
  return index;
}

VoxelIndex VoxelIndex::from_parts(double voxel_size, std::vector<VoxelKey> keys, std::vector<Label> representatives,
                                  std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> members,
                                  std::size_t point_count) {
  require(voxel_size > 0.0, "voxel size must be positive");
  require(representatives.size() == keys.size() && offsets.size() == keys.size() + 1,
          "voxel index arrays have inconsistent sizes");
  require(offsets.front() == 0 && offsets.back() == members.size() && members.size() == point_count,
          "voxel index offsets do not cover every point");
  require(std::is_sorted(offsets.begin(), offsets.end()), "voxel offsets not monotone");
  require(std::adjacent_find(keys.begin(), keys.end(), [](const VoxelKey& a, const VoxelKey& b) { return !(a < b); }) ==
              keys.end(),
          "voxel keys not strictly sorted");
  std::vector<std::uint8_t> seen(point_count, 0);
  for (auto m : members) {
    require(m < point_count && !seen[m], "voxel members are not a permutation of the points");
    seen[m] = 1;
  }
  VoxelIndex index;
  index.voxel_size_ = voxel_size;
  index.keys_ = std::move(keys);
  index.representatives_ = std::move(representatives);
  index.offsets_ = std::move(offsets);
  index.members_ = std::move(members);
  return index;
}

WorldModel WorldModel::from_cloud(PointCloud cloud, double voxel_size) {
  cloud.check_consistent();
  WorldModel w;
  w.voxels = VoxelIndex::build(cloud.points, cloud.labels, voxel_size);
  w.cloud = std::move(cloud);
  return w;
}

double WorldModel::labeled_density() const {
  std::size_t labeled = 0;
  std::size_t voxels_with_labels = 0;
  for (std::size_t v = 0; v < voxels.size(); ++v) {
    std::size_t count = 0;
    for (auto m : voxels.members(v)) count += cloud.labels[m] != kUnlabeled;
    if (count > 0) {
      labeled += count;
      ++voxels_with_labels;
    }
  }
  return voxels_with_labels == 0 ? 0.0 : static_cast<double>(labeled) / static_cast<double>(voxels_with_labels);
}

// ---------------------------------------------------------------------------
// Aggregation

Vec3 frame_center(const Pose& pose) { return pose.rotation().transpose() * pose.translation(); }

std::vector<std::int64_t> select_adjacent(std::span<const Pose> poses, std::size_t t, std::size_t count) {
  require(!poses.empty(), "select_adjacent: empty pose sequence");
  require(t < poses.size(), "select_adjacent: reference index out of range");
  require(count >= 1 && count <= poses.size(), "select_adjacent: count must lie in [1, sequence length]");

  const Vec3 ref = frame_center(poses[t]);
  struct Candidate {
    double distance;
    std::int64_t offset;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(poses.size());
  const auto base = static_cast<std::int64_t>(t);
  for (std::size_t n = 0; n < poses.size(); ++n) {
    candidates.push_back({(frame_center(poses[n]) - ref).norm(), static_cast<std::int64_t>(n) - base});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    const auto aa = std::abs(a.offset), ab = std::abs(b.offset);
    if (aa != ab) return aa < ab;
    return a.offset < b.offset;
  });

  std::vector<std::int64_t> offsets;
  offsets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) offsets.push_back(candidates[i].offset);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

namespace {

std::size_t frame_at(std::span<const LabeledFrame> frames, std::size_t t, std::int64_t offset) {
  const auto n = static_cast<std::int64_t>(t) + offset;
  if (n < 0 || n >= static_cast<std::int64_t>(frames.size())) {
    fail(ErrorKind::kInvalidArgument, "no frame (and no pose) for offset " + std::to_string(offset) +
                                          " from reference " + std::to_string(t));
  }
  return static_cast<std::size_t>(n);
}

/// T_t⁻¹∘T_n; exact identity for n == t.
std::optional<Pose> relative_pose(std::span<const LabeledFrame> frames, std::size_t t, std::size_t n) {
  if (n == t) return std::nullopt;
  return frames[t].pose.inverse().compose(frames[n].pose);
}

template <typename Keep>
void append_frame(PointCloud& out, const LabeledFrame& frame, const std::optional<Pose>& rel, std::uint32_t source,
                  Keep&& keep) {
  frame.cloud.check_consistent();
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    if (!keep(i)) continue;
    const Vec3& p = frame.cloud.points[i];
    out.push_back(rel ? rel->apply(p) : p, frame.cloud.intensity[i], frame.cloud.labels[i], source);
  }
}

}  // namespace

WorldModel aggregate_static(std::span<const LabeledFrame> frames, std::size_t t, std::span<const std::int64_t> offsets,
                            double voxel_size) {
  require(!frames.empty(), "aggregate_static: empty sequence");
  require(t < frames.size(), "aggregate_static: reference index out of range");
  PointCloud out;
  std::size_t total = 0;
  for (auto k : offsets) total += frames[frame_at(frames, t, k)].cloud.size();
  out.reserve(total);
  for (auto k : offsets) {
    const std::size_t n = frame_at(frames, t, k);
    append_frame(out, frames[n], relative_pose(frames, t, n), static_cast<std::uint32_t>(n),
                 [](std::size_t) { return true; });
  }
  return WorldModel::from_cloud(std::move(out), voxel_size);
}

PointCloud accumulate_dynamic(std::span<const LabeledFrame> frames, const BoxTrack& track) {
  track.validate();
  PointCloud out;
  Pose running;
  for (const auto& entry : track.entries) {
    running = running.compose(entry.motion.inverse());
    const auto it = std::find_if(frames.begin(), frames.end(),
                                 [&](const LabeledFrame& f) { return f.time_index == entry.frame; });
    if (it == frames.end()) continue;
    const auto source = static_cast<std::uint32_t>(it - frames.begin());
    const PointCloud& cloud = it->cloud;
    cloud.check_consistent();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3 world = it->pose.apply(cloud.points[i]);
      if (!entry.box.contains(world)) continue;
      out.push_back(running.apply(world), cloud.intensity[i], cloud.labels[i], source);
    }
  }
  return out;
}

std::optional<PointCloud> place_object(const PointCloud& accumulated, const BoxTrack& track, std::int64_t frame,
                                       const Pose& frame_pose) {
  track.validate();
  Pose running;
  for (const auto& entry : track.entries) {
    running = running.compose(entry.motion.inverse());
    if (entry.frame == frame) return transformed(accumulated, frame_pose.inverse().compose(running.inverse()));
  }
  return std::nullopt;
}

VoteResult vote_and_propagate(const WorldModel& world, std::span<const Vec3> unlabeled) {
  require(!world.cloud.empty(), "vote_and_propagate: empty world model");
  world.cloud.check_consistent();
  const VoxelIndex& voxels = world.voxels;
  require(voxels.member_ids().size() == world.cloud.size(), "world model voxel index is stale");

  VoteResult result;
  result.world_labels = world.cloud.labels;
  std::vector<Label> representative(voxels.size());
  std::vector<Label> scratch;
  for (std::size_t v = 0; v < voxels.size(); ++v) {
    scratch.clear();
    for (auto m : voxels.members(v)) scratch.push_back(world.cloud.labels[m]);
    const Label winner = modal_label(scratch);
    representative[v] = winner;
    if (winner == kUnlabeled) continue;
    for (auto m : voxels.members(v)) result.world_labels[m] = winner;
  }

  result.unlabeled_labels.assign(unlabeled.size(), kUnlabeled);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    if (const auto v = voxels.find(voxels.key_of(unlabeled[i]))) result.unlabeled_labels[i] = representative[*v];
  }
  return result;
}

WorldModel apply_votes(const WorldModel& world, const VoteResult& votes) {
  require(votes.world_labels.size() == world.cloud.size(), "vote result does not match the world model");
  PointCloud cloud = world.cloud;
  cloud.labels = votes.world_labels;
  return WorldModel::from_cloud(std::move(cloud), world.voxels.voxel_size());
}

std::vector<Label> semantic_kitti_dynamic_classes() {
  return {10, 11, 13, 15, 16, 18, 20, 30, 31, 32, 252, 253, 254, 255, 256, 257, 258, 259};
}

WorldModel build_world(std::span<const LabeledFrame> frames, std::size_t t, const AggregationOptions& options,
                       std::span<const BoxTrack> tracks, AggregationStats* stats) {
  require(!frames.empty(), "build_world: empty sequence");
  require(t < frames.size(), "build_world: reference index out of range");
  for (const auto& track : tracks) track.validate();

  std::vector<Pose> poses;
  poses.reserve(frames.size());
  for (const auto& f : frames) poses.push_back(f.pose);
  const auto offsets = select_adjacent(poses, t, std::min(options.count, frames.size()));

  auto is_dynamic_class = [&](Label l) {
    return std::find(options.dynamic_classes.begin(), options.dynamic_classes.end(), l) !=
           options.dynamic_classes.end();
  };

  // Points inside a tracked box are owned by that track's accumulation.
  auto boxes_for = [&](std::size_t n) {
    std::vector<OrientedBox> boxes;
    for (const auto& track : tracks) {
      for (const auto& e : track.entries) {
        if (e.frame == frames[n].time_index) boxes.push_back(e.box);
      }
    }
    return boxes;
  };
  auto outside_boxes = [&](std::size_t n, const std::vector<OrientedBox>& boxes, std::size_t i) {
    if (boxes.empty()) return true;
    const Vec3 world = frames[n].pose.apply(frames[n].cloud.points[i]);
    return std::none_of(boxes.begin(), boxes.end(), [&](const OrientedBox& b) { return b.contains(world); });
  };

  AggregationStats local;
  PointCloud cloud;
  for (auto k : offsets) {
    const std::size_t n = frame_at(frames, t, k);
    const auto boxes = boxes_for(n);
    const auto before = cloud.size();
    append_frame(cloud, frames[n], relative_pose(frames, t, n), static_cast<std::uint32_t>(n), [&](std::size_t i) {
      if (options.dynamic_window && is_dynamic_class(frames[n].cloud.labels[i])) return false;
      return outside_boxes(n, boxes, i);
    });
    local.static_points += cloud.size() - before;
  }
  local.frames_used = offsets.size();

  if (options.dynamic_window) {
    const auto half = static_cast<std::int64_t>(*options.dynamic_window / 2);
    for (std::int64_t k = -half; k <= half; ++k) {
      const auto n = static_cast<std::int64_t>(t) + k;
      if (n < 0 || n >= static_cast<std::int64_t>(frames.size())) continue;
      const auto idx = static_cast<std::size_t>(n);
      const auto boxes = boxes_for(idx);
      const auto before = cloud.size();
      append_frame(cloud, frames[idx], relative_pose(frames, t, idx), static_cast<std::uint32_t>(idx),
                   [&](std::size_t i) {
                     return is_dynamic_class(frames[idx].cloud.labels[i]) && outside_boxes(idx, boxes, i);
                   });
      local.dynamic_points += cloud.size() - before;
    }
  }

  for (const auto& track : tracks) {
    const PointCloud accumulated = accumulate_dynamic(frames, track);
    if (auto placed = place_object(accumulated, track, frames[t].time_index, frames[t].pose)) {
      local.object_points += placed->size();
      cloud.append(*placed);
    }
  }

  WorldModel world = WorldModel::from_cloud(std::move(cloud), options.voxel_size);
  if (options.vote && !world.cloud.empty()) world = apply_votes(world, vote_and_propagate(world, {}));
  if (stats) *stats = local;
  return world;
}

}  // namespace lidomaug
