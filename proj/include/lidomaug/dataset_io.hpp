#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidomaug/geometry.hpp"
#include "lidomaug/sensor_model.hpp"
#include "lidomaug/world_model.hpp"

namespace lidomaug {

// --- KITTI-style scans and labels ------------------------------------------

/// Little-endian float32 (x, y, z, intensity) records. Labels and sources of
/// the result are zero.
PointCloud read_scan(const std::string& path);
void write_scan(const PointCloud& cloud, const std::string& path);

/// Raw little-endian uint32 per point: semantic class in the low 16 bits,
/// instance id in the high 16. Throws when `expected_count` is given and differs.
std::vector<std::uint32_t> read_labels(const std::string& path, std::optional<std::size_t> expected_count = {});
void write_labels(std::span<const std::uint32_t> raw, const std::string& path);

inline Label semantic_class(std::uint32_t raw) { return static_cast<Label>(raw & 0xFFFFu); }
std::vector<Label> semantic_classes(std::span<const std::uint32_t> raw);

// --- Poses and tracks -------------------------------------------------------

struct PoseRepair {
  std::size_t line = 0;
  double orthonormality_error = 0.0;
};

struct PoseFile {
  std::vector<Pose> poses;
  /// Lines whose rotation drifted past kPoseRepairThreshold and were
  /// projected onto the nearest rotation.
  std::vector<PoseRepair> repairs;
};

/// Rotations with |RᵀR − I| above this are reported when repaired.
inline constexpr double kPoseRepairThreshold = 1e-4;
/// Rotations drifting further than this are rejected outright.
inline constexpr double kPoseRejectThreshold = 1e-2;

/// Nearest rotation in the Frobenius sense (polar factor, det forced to +1).
Mat3 nearest_rotation(const Mat3& m);

/// 12 whitespace-separated numbers per line, row-major [R|t].
PoseFile parse_poses(std::string_view text);
PoseFile read_poses(const std::string& path);
void write_poses(std::span<const Pose> poses, const std::string& path);

/// One entry per line:
///   object_id frame cx cy cz l w h yaw m00 m01 m02 m03 m10 ... m23
/// (box size is full length/width/height; the 12 trailing values are the
/// row-major 3x4 frame-to-frame object motion). '#' starts a comment.
std::vector<BoxTrack> parse_tracks(std::string_view text);
std::vector<BoxTrack> read_tracks(const std::string& path);
std::string format_tracks(std::span<const BoxTrack> tracks);

// --- Outputs ------------------------------------------------------------------

/// Binary little-endian PLY with float x, y, z, intensity and ushort label.
void write_ply(const PointCloud& cloud, const std::string& path);
/// Reads files produced by write_ply; rejects any other layout.
PointCloud read_ply(const std::string& path);

/// Range in millimeters for the 16-bit PNG: 0 for invalid pixels, saturated at
/// 65535 (65.535 m), and at least 1 for any valid pixel.
std::uint16_t range_to_millimeters(double range, bool valid);

struct Gray16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  // row-major
};

void write_range_png(const RangeMap& map, const std::string& path);
Gray16Image read_png16(const std::string& path);

// --- World cache ------------------------------------------------------------

inline constexpr std::uint8_t kWorldCacheVersion = 1;

struct CachedWorld {
  WorldModel world;
  std::uint64_t config_hash = 0;
};

/// Versioned binary container: magic, version byte, config hash, point /
/// label / source / voxel arrays and a trailing content checksum.
void cache_world(const WorldModel& world, std::uint64_t config_hash, const std::string& path);
CachedWorld load_world(const std::string& path);

/// FNV-1a 64 over bytes.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size);
  template <typename T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t content_hash(const WorldModel& world);
std::uint64_t content_hash(const PointCloud& cloud);
std::uint64_t content_hash(const RangeMap& map);
std::uint64_t file_hash(const std::string& path);
std::string hex64(std::uint64_t value);

// --- Sequences --------------------------------------------------------------

struct SequenceLoadOptions {
  bool allow_missing_labels = false;
};

struct LoadedSequence {
  std::vector<LabeledFrame> frames;
  std::vector<std::string> warnings;
};

/// Layout: <dir>/velodyne/NNNNNN.bin, <dir>/labels/NNNNNN.label,
/// <dir>/poses.txt (one sensor->world pose per scan, in scan order).
/// Collects every missing/malformed file before throwing a single Error that
/// lists them.
LoadedSequence load_sequence(const std::string& dir, const SequenceLoadOptions& options = {});

}  // namespace lidomaug
