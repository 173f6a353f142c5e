#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace lidomaug {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Semantic class id. 0 is "unlabeled" (SemanticKITTI convention).
using Label = std::uint16_t;
inline constexpr Label kUnlabeled = 0;

inline constexpr std::uint32_t kNoSource = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::uint32_t kNoPoint = std::numeric_limits<std::uint32_t>::max();

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Euclidean norm written out so every code path (projection, z-buffer,
/// oracles) rounds identically.
inline double norm_of(const Vec3& p) { return std::sqrt(p.x() * p.x() + p.y() * p.y() + p.z() * p.z()); }

/// Rigid transform T(x) = R x + t. Constructed poses are checked to be proper
/// rotations (orthonormal, det +1) within 1e-6.
class Pose {
 public:
  static constexpr double kTolerance = 1e-6;

  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }
  static Pose from_yaw(double yaw, const Vec3& translation = Vec3::Zero());
  static Pose from_translation(const Vec3& translation) { return Pose(Mat3::Identity(), translation); }
  /// Row-major 3x4 [R|t], the KITTI odometry layout.
  static Pose from_row_major(const double (&values)[12]);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const {
    const Mat3& r = rotation_;
    return Vec3(r(0, 0) * p.x() + r(0, 1) * p.y() + r(0, 2) * p.z() + translation_.x(),
                r(1, 0) * p.x() + r(1, 1) * p.y() + r(1, 2) * p.z() + translation_.y(),
                r(2, 0) * p.x() + r(2, 1) * p.y() + r(2, 2) * p.z() + translation_.z());
  }

  Pose inverse() const;
  /// (this ∘ other)(x) = this(other(x)).
  Pose compose(const Pose& other) const;

  Eigen::Matrix4d homogeneous() const;

  /// Largest |RᵀR − I| entry.
  static double orthonormality_error(const Mat3& r);
  static bool is_rotation(const Mat3& r, double tol = kTolerance);

 private:
  struct Unchecked {};
  Pose(const Mat3& rotation, const Vec3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  Mat3 rotation_;
  Vec3 translation_;
};

/// Structure-of-arrays point set. All channels have the same length.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensity;
  std::vector<Label> labels;
  std::vector<std::uint32_t> sources;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void reserve(std::size_t n) {
    points.reserve(n);
    intensity.reserve(n);
    labels.reserve(n);
    sources.reserve(n);
  }

  void push_back(const Vec3& p, float i, Label l, std::uint32_t s) {
    points.push_back(p);
    intensity.push_back(i);
    labels.push_back(l);
    sources.push_back(s);
  }

  void append(const PointCloud& other);

  /// Throws if the channel lengths disagree.
  void check_consistent() const;

  bool operator==(const PointCloud&) const = default;
};

/// New cloud with every point mapped through `pose`; other channels copied.
PointCloud transformed(const PointCloud& cloud, const Pose& pose);

}  // namespace lidomaug
