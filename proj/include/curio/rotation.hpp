#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace curio {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace so3 {

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

// Rodrigues formula.
inline Mat3 exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = hat(w);
  if (theta < 1e-8) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

// Principal logarithm, rotation angle in [0, pi].
inline Vec3 log(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(c);
  const Vec3 skew = 0.5 * vee(r - r.transpose());
  if (theta < 1e-6) {
    return skew;
  }
  if (std::numbers::pi - theta < 1e-4) {
    // Near pi the skew part vanishes; recover the axis from the symmetric part.
    const Mat3 s = 0.5 * (r + Mat3::Identity());
    Eigen::Index k = 0;
    s.diagonal().maxCoeff(&k);
    Vec3 axis = s.col(k) / std::sqrt(std::max(s(k, k), 1e-300));
    axis.normalize();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return theta * axis;
  }
  return theta / std::sin(theta) * skew;
}

// Closest rotation in the Frobenius sense (polar factor).
inline Mat3 project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  return u * v.transpose();
}

inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0,
       0, std::cos(a), -std::sin(a),
       0, std::sin(a), std::cos(a);
  return m;
}

inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a),
       0, 1, 0,
       -std::sin(a), 0, std::cos(a);
  return m;
}

inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0,
       std::sin(a), std::cos(a), 0,
       0, 0, 1;
  return m;
}

// Z-Y-X convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 from_euler(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

inline bool is_rotation(const Mat3& r, double tol = 1e-6) {
  if (!r.allFinite()) return false;
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace so3
}  // namespace curio
