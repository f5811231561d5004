// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace splatforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;

template <class S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3T = Eigen::Matrix<S, 3, 3>;

template <class S>
Mat3T<S> skew(const Vec3T<S>& v) {
    Mat3T<S> m;
    m << S(0), -v.z(), v.y(),
         v.z(), S(0), -v.x(),
        -v.y(), v.x(), S(0);
    return m;
}

/// Rodrigues formula; exact identity for a zero vector.
inline Mat3 so3_exp(const Vec3& w) {
    const double theta = w.norm();
    if (theta < 1e-12) return Mat3::Identity() + skew<double>(w);
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

/// Rotation vector of R, angle in [0, pi].
inline Vec3 so3_log(const Mat3& R) {
    const Eigen::AngleAxisd aa(R);
    return aa.axis() * aa.angle();
}

inline double rotation_angle(const Mat3& R) {
    const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
    return std::acos(c);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Mat3 rpy_to_matrix(const Vec3& rpy) {
    return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
            Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
        .toRotationMatrix();
}

/// Inverse of rpy_to_matrix (fixed-axis XYZ, URDF convention).
inline Vec3 matrix_to_rpy(const Mat3& R) {
    const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
    double roll, yaw;
    if (std::abs(std::cos(pitch)) > 1e-9) {
        roll = std::atan2(R(2, 1), R(2, 2));
        yaw = std::atan2(R(1, 0), R(0, 0));
    } else {
        roll = 0.0;
        yaw = std::atan2(-R(0, 1), R(1, 1));
    }
    return {roll, pitch, yaw};
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace splatforge
