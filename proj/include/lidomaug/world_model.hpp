#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lidomaug/geometry.hpp"

namespace lidomaug {

/// One scan of a sequence with its sensor->world pose.
struct LabeledFrame {
  PointCloud cloud;  // sensor coordinates; `sources` is ignored on input
  Pose pose;
  std::int64_t time_index = 0;
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
  double yaw = 0.0;  // rotation about +z

  bool contains(const Vec3& p) const;
  double volume() const { return 8.0 * half_extents.x() * half_extents.y() * half_extents.z(); }
};

/// Box and frame-to-frame object motion at one frame. Boxes and motions are
/// in world coordinates; `motion` maps the object from the previous entry's
/// frame to this one (identity for the first entry).
struct TrackEntry {
  std::int64_t frame = 0;
  OrientedBox box;
  Pose motion;
};

struct BoxTrack {
  std::int64_t object_id = 0;
  std::vector<TrackEntry> entries;

  /// Frames strictly increasing and contiguous, boxes with positive volume.
  void validate() const;
};

struct VoxelKey {
  std::int32_t x = 0, y = 0, z = 0;
  auto operator<=>(const VoxelKey&) const = default;
};

/// Sorted, compressed voxel grid over a point set: for every occupied voxel,
/// its key, representative (modal) label and member point ids.
class VoxelIndex {
 public:
  static constexpr double kDefaultSize = 0.1;

  VoxelIndex() = default;
  static VoxelIndex build(std::span<const Vec3> points, std::span<const Label> labels, double voxel_size = kDefaultSize);

  VoxelKey key_of(const Vec3& p) const;
  std::optional<std::size_t> find(const VoxelKey& key) const;

  double voxel_size() const { return voxel_size_; }
  std::size_t size() const { return keys_.size(); }
  const VoxelKey& key(std::size_t voxel) const { return keys_[voxel]; }
  Label representative(std::size_t voxel) const { return representatives_[voxel]; }
  std::span<const std::uint32_t> members(std::size_t voxel) const {
    return {members_.data() + offsets_[voxel], members_.data() + offsets_[voxel + 1]};
  }

  // Raw arrays, for serialization.
  const std::vector<VoxelKey>& keys() const { return keys_; }
  const std::vector<Label>& representatives() const { return representatives_; }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<std::uint32_t>& member_ids() const { return members_; }
  static VoxelIndex from_parts(double voxel_size, std::vector<VoxelKey> keys, std::vector<Label> representatives,
                               std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> members,
                               std::size_t point_count);

  bool operator==(const VoxelIndex&) const = default;

 private:
  double voxel_size_ = kDefaultSize;
  std::vector<VoxelKey> keys_;
  std::vector<Label> representatives_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<std::uint32_t> members_;
};

/// Modal non-zero label, ties to the smallest id; kUnlabeled if none.
Label modal_label(std::span<const Label> labels);

/// Aggregated labeled point set in reference-frame sensor coordinates.
struct WorldModel {
  PointCloud cloud;
  VoxelIndex voxels;

  static WorldModel from_cloud(PointCloud cloud, double voxel_size = VoxelIndex::kDefaultSize);

  std::size_t size() const { return cloud.size(); }
  /// Labeled points per voxel that holds at least one labeled point.
  double labeled_density() const;

  bool operator==(const WorldModel&) const = default;
};

/// The frame center c_n = R_nᵀ t_n used to measure geometric adjacency.
Vec3 frame_center(const Pose& pose);

/// Offsets k (t + k inside the sequence) of the `count` frames whose centers
/// are nearest to frame t's, ties broken by smaller |k| then smaller k.
/// Returned in ascending order.
std::vector<std::int64_t> select_adjacent(std::span<const Pose> poses, std::size_t t, std::size_t count);

/// Union over k of T_t⁻¹∘T_{t+k}(P_{t+k}), in frame-t sensor coordinates.
/// `sources` holds the sequence index t + k of each point.
WorldModel aggregate_static(std::span<const LabeledFrame> frames, std::size_t t, std::span<const std::int64_t> offsets,
                            double voxel_size = VoxelIndex::kDefaultSize);

/// Accumulates an object's in-box points across its track, cancelling the
/// object's motion: T ← T∘(T_n)⁻¹, then T(P_n ∩ b_n). Points come out in world
/// coordinates at the object's first-entry placement. Frames of the track that
/// are absent from `frames` (matched by time_index) are skipped.
PointCloud accumulate_dynamic(std::span<const LabeledFrame> frames, const BoxTrack& track);

/// Moves accumulated object points (first-entry placement, world coordinates)
/// to where the object is at `frame`, expressed in that frame's sensor
/// coordinates. nullopt when the track has no entry for `frame`.
std::optional<PointCloud> place_object(const PointCloud& accumulated, const BoxTrack& track, std::int64_t frame,
                                       const Pose& frame_pose);

struct VoteResult {
  std::vector<Label> world_labels;
  std::vector<Label> unlabeled_labels;
};

/// Per-voxel majority vote. Every world point in a voxel with at least one
/// labeled member takes the modal label (consistency for labeled members,
/// propagation for unlabeled ones); `unlabeled` points landing in such voxels
/// receive it too. Everything else stays kUnlabeled.
VoteResult vote_and_propagate(const WorldModel& world, std::span<const Vec3> unlabeled);

/// Copy of `world` with the voted labels applied and representatives updated.
WorldModel apply_votes(const WorldModel& world, const VoteResult& votes);

/// Movable SemanticKITTI classes (car, bicycle, bus, motorcycle, on-rails,
/// truck, other-vehicle, person, bicyclist, motorcyclist, moving-*).
std::vector<Label> semantic_kitti_dynamic_classes();

struct AggregationOptions {
  std::size_t count = 40;  // N adjacent frames
  double voxel_size = VoxelIndex::kDefaultSize;
  /// When set, points of `dynamic_classes` come only from the temporal
  /// window |k| <= window / 2 instead of the geometric neighbours.
  std::optional<std::size_t> dynamic_window;
  std::vector<Label> dynamic_classes = semantic_kitti_dynamic_classes();
  bool vote = true;
};

struct AggregationStats {
  std::size_t frames_used = 0;
  std::size_t static_points = 0;
  std::size_t dynamic_points = 0;
  std::size_t object_points = 0;
};

/// Full world-model construction for reference frame t: geometric-adjacency
/// aggregation, optional dynamic handling (temporal window and/or box tracks)
/// and voxel label voting.
WorldModel build_world(std::span<const LabeledFrame> frames, std::size_t t, const AggregationOptions& options,
                       std::span<const BoxTrack> tracks = {}, AggregationStats* stats = nullptr);

}  // namespace lidomaug
