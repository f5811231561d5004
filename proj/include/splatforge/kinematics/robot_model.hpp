// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splatforge/assets/mesh.hpp"
#include "splatforge/core/error.hpp"
#include "splatforge/core/rigid_transform.hpp"

namespace splatforge {

enum class JointType { revolute, prismatic, fixed };

inline const char* to_string(JointType t) {
    switch (t) {
        case JointType::revolute: return "revolute";
        case JointType::prismatic: return "prismatic";
        case JointType::fixed: return "fixed";
    }
    return "?";
}

struct Inertial {
    double mass = 0.0;
    RigidTransform origin;  // center of mass frame in the link frame
    Mat3 inertia = Mat3::Zero();
};

struct LinkGeometry {
    enum class Kind { mesh, box, cylinder, sphere };
    Kind kind = Kind::mesh;
    std::string filename;  // for meshes, as written in the document
    Vec3 scale = Vec3::Ones();
    Vec3 size = Vec3::Zero();  // box
    double radius = 0.0;       // cylinder, sphere
    double length = 0.0;       // cylinder
    RigidTransform origin;
};

struct Link {
    std::string name;
    std::optional<Inertial> inertial;
    std::vector<LinkGeometry> visual;
    std::vector<LinkGeometry> collision;
    TriangleMesh collision_mesh;  // union of collision geometry in the link frame, once loaded
};

struct Joint {
    std::string name;
    JointType type = JointType::fixed;
    std::string parent;
    std::string child;
    RigidTransform origin;
    Vec3 axis = Vec3::UnitX();
    double lower = 0.0;
    double upper = 0.0;
    double effort = 0.0;
    double velocity = 0.0;

    bool movable() const { return type != JointType::fixed; }

    /// Joint motion for value q: rotation about or translation along the axis.
    RigidTransform motion(double q) const {
        if (type == JointType::revolute) return {Eigen::AngleAxisd(q, axis).toRotationMatrix(), Vec3::Zero()};
        if (type == JointType::prismatic) return RigidTransform::from_translation(axis * q);
        return {};
    }
};

using JointConfig = VecX;

/// Kinematic tree. Call finalize() after editing links or joints.
struct RobotModel {
    std::string name;
    std::vector<Link> links;
    std::vector<Joint> joints;
    std::string root;

    // Derived by finalize().
    std::vector<int> joint_order;     // parents before children
    std::vector<int> movable_joints;  // joint indices in document order; defines JointConfig layout
    std::map<std::string, int> link_index;
    std::vector<int> parent_joint;  // per link, −1 for the root

    int dof() const { return static_cast<int>(movable_joints.size()); }

    const Link& link(const std::string& n) const {
        const auto it = link_index.find(n);
        if (it == link_index.end()) throw ValidationError("link", "unknown link '" + n + "'");
        return links[it->second];
    }

    const Joint& movable_joint(int k) const { return joints[movable_joints[k]]; }

    VecX lower_limits() const {
        VecX v(dof());
        for (int k = 0; k < dof(); ++k) v[k] = movable_joint(k).lower;
        return v;
    }
    VecX upper_limits() const {
        VecX v(dof());
        for (int k = 0; k < dof(); ++k) v[k] = movable_joint(k).upper;
        return v;
    }

    /// Validates the tree (unique names, one parent per link, single root, no cycles,
    /// unit axes, ordered limits) and builds the derived indices.
    void finalize() {
        link_index.clear();
        for (std::size_t i = 0; i < links.size(); ++i)
            if (!link_index.emplace(links[i].name, static_cast<int>(i)).second)
                throw ValidationError("link", "duplicate link name '" + links[i].name + "'");
        if (links.empty()) throw ValidationError("link", "robot has no links");
        parent_joint.assign(links.size(), -1);
        std::map<std::string, int> joint_names;
        movable_joints.clear();
        for (std::size_t j = 0; j < joints.size(); ++j) {
            auto& jt = joints[j];
            if (!joint_names.emplace(jt.name, static_cast<int>(j)).second)
                throw ValidationError("joint", "duplicate joint name '" + jt.name + "'");
            if (!link_index.count(jt.parent)) throw ValidationError("joint." + jt.name + ".parent", "unknown link '" + jt.parent + "'");
            if (!link_index.count(jt.child)) throw ValidationError("joint." + jt.name + ".child", "unknown link '" + jt.child + "'");
            int& pj = parent_joint[link_index[jt.child]];
            if (pj >= 0) throw ValidationError("joint." + jt.name, "link '" + jt.child + "' has more than one parent joint");
            pj = static_cast<int>(j);
            if (!jt.origin.is_valid(1e-6)) throw ValidationError("joint." + jt.name + ".origin", "not a rigid transform");
            if (jt.movable()) {
                const double n = jt.axis.norm();
                if (!(n > 0) || !std::isfinite(n)) throw ValidationError("joint." + jt.name + ".axis", "axis must be non-zero");
                jt.axis /= n;
                if (!(jt.lower <= jt.upper)) throw ValidationError("joint." + jt.name + ".limit", "lower limit exceeds upper limit");
                movable_joints.push_back(static_cast<int>(j));
            }
        }
        std::vector<std::string> roots;
        for (std::size_t i = 0; i < links.size(); ++i)
            if (parent_joint[i] < 0) roots.push_back(links[i].name);
        if (roots.empty()) throw ValidationError("joint", "joint graph has a cycle (no root link)");
        if (roots.size() > 1) throw ValidationError("joint", "joint graph has several roots: " + roots[0] + ", " + roots[1]);
        root = roots.front();
        // Breadth-first from the root; links never reached sit on a cycle.
        joint_order.clear();
        std::vector<bool> reached(links.size(), false);
        reached[link_index[root]] = true;
        std::vector<std::string> frontier{root};
        while (!frontier.empty()) {
            std::vector<std::string> next;
            for (const auto& p : frontier)
                for (std::size_t j = 0; j < joints.size(); ++j)
                    if (joints[j].parent == p) {
                        joint_order.push_back(static_cast<int>(j));
                        reached[link_index[joints[j].child]] = true;
                        next.push_back(joints[j].child);
                    }
            frontier = std::move(next);
        }
        for (std::size_t i = 0; i < links.size(); ++i)
            if (!reached[i]) throw ValidationError("joint", "joint graph has a cycle through link '" + links[i].name + "'");
    }

    /// Throws unless q has one finite entry per movable joint, within limits when `strict`.
    void check_config(const JointConfig& q, bool strict = true) const {
        if (q.size() != dof())
            throw ValidationError("q", "expected " + std::to_string(dof()) + " joint values, got " + std::to_string(q.size()));
        for (int k = 0; k < dof(); ++k) {
            const auto& j = movable_joint(k);
            if (!std::isfinite(q[k])) throw ValidationError("q." + j.name, "non-finite joint value");
            if (strict && (q[k] < j.lower - 1e-12 || q[k] > j.upper + 1e-12))
                throw ValidationError("q." + j.name, "value " + std::to_string(q[k]) + " outside limits [" +
                                                         std::to_string(j.lower) + ", " + std::to_string(j.upper) + "]");
        }
    }

    JointConfig clamp(const JointConfig& q) const { return q.cwiseMax(lower_limits()).cwiseMin(upper_limits()); }

    bool has_geometry() const {
        for (const auto& l : links)
            if (!l.collision_mesh.empty()) return true;
        return false;
    }
};

/// Pose of every link (indexed like robot.links); the root sits at identity.
inline std::vector<RigidTransform> link_poses(const RobotModel& robot, const JointConfig& q) {
    robot.check_config(q, false);
    std::vector<double> value(robot.joints.size(), 0.0);
    for (int k = 0; k < robot.dof(); ++k) value[robot.movable_joints[k]] = q[k];
    std::vector<RigidTransform> pose(robot.links.size());
    for (const int j : robot.joint_order) {
        const auto& jt = robot.joints[j];
        pose[robot.link_index.at(jt.child)] =
            compose(compose(pose[robot.link_index.at(jt.parent)], jt.origin), jt.motion(value[j]));
    }
    return pose;
}

inline std::map<std::string, RigidTransform> forward_kinematics(const RobotModel& robot, const JointConfig& q) {
    const auto poses = link_poses(robot, q);
    std::map<std::string, RigidTransform> out;
    for (std::size_t i = 0; i < robot.links.size(); ++i) out.emplace(robot.links[i].name, poses[i]);
    return out;
}

inline RigidTransform link_pose(const RobotModel& robot, const JointConfig& q, const std::string& link) {
    const auto it = robot.link_index.find(link);
    if (it == robot.link_index.end()) throw ValidationError("link", "unknown link '" + link + "'");
    return link_poses(robot, q)[it->second];
}

/// Collision geometry of every link posed at q, merged into one mesh.
inline TriangleMesh posed_collision_mesh(const RobotModel& robot, const JointConfig& q) {
    const auto poses = link_poses(robot, q);
    TriangleMesh out;
    for (std::size_t i = 0; i < robot.links.size(); ++i) {
        if (robot.links[i].collision_mesh.empty()) continue;
        TriangleMesh m = transformed(robot.links[i].collision_mesh, poses[i]);
        m.face_labels.clear();
        append_mesh(out, m);
    }
    return out;
}

}  // namespace splatforge
