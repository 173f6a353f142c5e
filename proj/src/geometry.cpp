#include "lidomaug/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "lidomaug/error.hpp"

namespace lidomaug {

Pose::Pose(const Mat3& rotation, const Vec3& translation) : rotation_(rotation), translation_(translation) {
  require(rotation.allFinite() && translation.allFinite(), "pose has non-finite entries");
  require(is_rotation(rotation), "pose rotation is not orthonormal with det +1 (error " +
                                     std::to_string(orthonormality_error(rotation)) + ")");
}

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return Pose(r, translation, Unchecked{});
}

Pose Pose::from_row_major(const double (&v)[12]) {
  Mat3 r;
  r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  return Pose(r, Vec3(v[3], v[7], v[11]));
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_), Unchecked{});
}

Pose Pose::compose(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_, Unchecked{});
}

Eigen::Matrix4d Pose::homogeneous() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double Pose::orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool Pose::is_rotation(const Mat3& r, double tol) {
  return orthonormality_error(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

void PointCloud::append(const PointCloud& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  intensity.insert(intensity.end(), other.intensity.begin(), other.intensity.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  sources.insert(sources.end(), other.sources.begin(), other.sources.end());
}

void PointCloud::check_consistent() const {
  const std::size_t n = points.size();
  require(intensity.size() == n && labels.size() == n && sources.size() == n,
          "point cloud channels have mismatched lengths");
}

PointCloud transformed(const PointCloud& cloud, const Pose& pose) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = pose.apply(p);
  return out;
}

}  // namespace lidomaug
