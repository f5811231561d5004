// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Small robot models built from raw joint tables, plus an independent homogeneous-matrix
// forward-kinematics oracle over the same tables.
//
#pragma once

#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "splatforge/kinematics/urdf.hpp"
#include "support/generators.hpp"

namespace splatforge::test_support {

struct ChainJoint {
    JointType type;
    Vec3 xyz;
    Vec3 rpy;
    Vec3 axis;
    double lower, upper;
};

struct ChainLinkShape {
    LinkGeometry::Kind kind;
    Vec3 size;  // box size, or (radius, length, 0) for cylinders
    Vec3 offset;
};

/// Serial chain: link_0 … link_n, joint k connects link_k to link_{k+1}.
inline RobotModel make_chain(const std::vector<ChainJoint>& js, const std::vector<ChainLinkShape>& shapes = {}) {
    RobotModel r;
    r.name = "chain";
    for (std::size_t i = 0; i <= js.size(); ++i) {
        Link l{"link_" + std::to_string(i)};
        if (i < shapes.size()) {
            LinkGeometry g;
            g.kind = shapes[i].kind;
            g.size = shapes[i].size;
            g.radius = shapes[i].size.x();
            g.length = shapes[i].size.y();
            g.origin = RigidTransform::from_translation(shapes[i].offset);
            l.collision.push_back(g);
        }
        r.links.push_back(l);
    }
    for (std::size_t k = 0; k < js.size(); ++k) {
        Joint j;
        j.name = "joint_" + std::to_string(k + 1);
        j.type = js[k].type;
        j.parent = "link_" + std::to_string(k);
        j.child = "link_" + std::to_string(k + 1);
        j.origin = {rpy_to_matrix(js[k].rpy), js[k].xyz};
        j.axis = js[k].axis;
        j.lower = js[k].lower;
        j.upper = js[k].upper;
        r.joints.push_back(j);
    }
    r.finalize();
    load_robot_geometry(r, ".");
    return r;
}

/// Pose of every link by 4×4 products built from the raw table with Eigen's Transform types.
inline std::vector<Mat4> chain_oracle(const std::vector<ChainJoint>& js, const VecX& q) {
    std::vector<Mat4> out{Mat4::Identity()};
    Eigen::Affine3d T = Eigen::Affine3d::Identity();
    int k = 0;
    for (const auto& j : js) {
        Eigen::Affine3d step = Eigen::Translation3d(j.xyz) * Eigen::AngleAxisd(j.rpy.z(), Vec3::UnitZ()) *
                               Eigen::AngleAxisd(j.rpy.y(), Vec3::UnitY()) * Eigen::AngleAxisd(j.rpy.x(), Vec3::UnitX());
        if (j.type == JointType::revolute) step = step * Eigen::AngleAxisd(q[k++], j.axis.normalized());
        else if (j.type == JointType::prismatic) step = step * Eigen::Translation3d(j.axis.normalized() * q[k++]);
        T = T * step;
        out.push_back(T.matrix());
    }
    return out;
}

/// Six-joint arm with box and cylinder links; asymmetric in its default pose.
inline std::vector<ChainJoint> arm_joints() {
    const double L = 2.8;
    return {{JointType::revolute, {0, 0, 0.10}, {0, 0, 0}, {0, 0, 1}, -L, L},
            {JointType::revolute, {0, 0, 0.25}, {0, 0, 0}, {0, 1, 0}, -2.0, 2.0},
            {JointType::revolute, {0, 0, 0.35}, {0, 0, 0}, {0, 1, 0}, -2.5, 2.5},
            {JointType::revolute, {0, 0, 0.30}, {0, 0, 0}, {0, 0, 1}, -L, L},
            {JointType::revolute, {0, 0, 0.08}, {0, 0, 0}, {0, 1, 0}, -2.0, 2.0},
            {JointType::revolute, {0, 0, 0.06}, {0, 0, 0}, {0, 0, 1}, -L, L}};
}

inline RobotModel make_test_arm() {
    using K = LinkGeometry::Kind;
    return make_chain(arm_joints(), {{K::box, {0.24, 0.18, 0.10}, {0.02, 0, 0.05}},
                                     {K::cylinder, {0.06, 0.25, 0}, {0, 0, 0.125}},
                                     {K::box, {0.09, 0.07, 0.35}, {0, 0.01, 0.175}},
                                     {K::box, {0.06, 0.06, 0.30}, {0.01, 0, 0.15}},
                                     {K::cylinder, {0.04, 0.08, 0}, {0, 0, 0.04}},
                                     {K::box, {0.05, 0.08, 0.06}, {0, 0.01, 0.03}},
                                     {K::box, {0.14, 0.03, 0.05}, {0.03, 0, 0.025}}});
}

inline VecX arm_default_q() {
    VecX q(6);
    q << 0.3, 0.5, 0.9, -0.4, 0.6, 0.2;
    return q;
}

/// Planar two-link arm in the xy plane with link lengths a and b; end link "link_3". The
/// shoulder turns up to a full circle either way so no reachable target sits behind a limit.
inline std::vector<ChainJoint> planar_2r_joints(double a = 0.3, double b = 0.2) {
    return {{JointType::revolute, {0, 0, 0}, {0, 0, 0}, {0, 0, 1}, -2 * M_PI, 2 * M_PI},
            {JointType::revolute, {a, 0, 0}, {0, 0, 0}, {0, 0, 1}, -M_PI, M_PI},
            {JointType::fixed, {b, 0, 0}, {0, 0, 0}, {1, 0, 0}, 0, 0}};
}

}  // namespace splatforge::test_support
