// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/math.hpp"

namespace splatforge {

/// Element of SE(3): x -> R x + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    /// Throws ValidationError unless the upper-left block is in SO(3) and the last row is (0,0,0,1).
    static RigidTransform from_matrix(const Mat4& m, double tol = 1e-6) {
        if (!m.allFinite()) throw ValidationError("transform", "non-finite matrix");
        if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > tol)
            throw ValidationError("transform", "last row must be (0, 0, 0, 1)");
        RigidTransform out{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
        if (!out.is_valid(tol)) throw ValidationError("transform", "rotation block is not in SO(3)");
        return out;
    }

    Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform inverse() const {
        const Mat3 rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    bool is_valid(double tol = 1e-8) const {
        return rotation.allFinite() && translation.allFinite() &&
               (rotation.transpose() * rotation - Mat3::Identity()).norm() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

/// (a ∘ b)(p) = a(b(p)).
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline Vec3 apply(const RigidTransform& a, const Vec3& p) { return a.apply(p); }
inline RigidTransform inverse(const RigidTransform& a) { return a.inverse(); }

/// Exponential map of se(3); xi = (rho, phi) with translation part first.
inline RigidTransform se3_exp(const Vec6& xi) {
    const Vec3 rho = xi.head<3>();
    const Vec3 phi = xi.tail<3>();
    const double theta = phi.norm();
    const Mat3 K = skew<double>(phi);
    Mat3 V;
    if (theta < 1e-10) {
        V = Mat3::Identity() + 0.5 * K;
    } else {
        const double t2 = theta * theta;
        V = Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * K + (theta - std::sin(theta)) / (t2 * theta) * K * K;
    }
    return {so3_exp(phi), V * rho};
}

/// Angle of a^-1 b in radians and distance between translations.
struct PoseError {
    double rotation_rad;
    double translation;
};

inline PoseError pose_error(const RigidTransform& a, const RigidTransform& b) {
    return {rotation_angle(a.rotation.transpose() * b.rotation), (a.translation - b.translation).norm()};
}

/// Re-orthonormalizes a nearly-rotation matrix (polar projection).
inline Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

// JSON interchange: 4x4 row-major nested array.
inline nlohmann::json to_json_matrix(const RigidTransform& t) {
    const Mat4 m = t.matrix();
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    return rows;
}

inline RigidTransform from_json_matrix(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("", "pose", "expected a 4x4 row-major matrix");
    Mat4 m;
    for (int r = 0; r < 4; ++r) {
        if (!j[r].is_array() || j[r].size() != 4) throw ParseError("", "pose", "expected a 4x4 row-major matrix");
        for (int c = 0; c < 4; ++c) {
            if (!j[r][c].is_number()) throw ParseError("", "pose", "matrix entries must be numbers");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return RigidTransform::from_matrix(m);
}

}  // namespace splatforge
