// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "splatforge/core/random.hpp"
#include "splatforge/kinematics/robot_model.hpp"
#include "splatforge/registration/icp.hpp"
#include "splatforge/scene/scene_transform.hpp"
#include "splatforge/semantics/feature_field.hpp"

namespace splatforge {

/// n points spread uniformly by area over the robot's collision meshes posed at q. Faces are
/// chosen by systematic sampling of the area CDF (one random offset, n evenly spaced probes),
/// so each face receives its expected share of points to within one.
inline std::vector<Vec3> sample_robot_pointcloud(const RobotModel& robot, const JointConfig& q, std::size_t n, std::uint64_t seed) {
    robot.check_config(q, true);
    if (!robot.has_geometry()) throw ValidationError("robot", "robot has no collision geometry");
    const TriangleMesh mesh = posed_collision_mesh(robot, q);
    std::vector<double> cdf(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) cdf[f] = (total += mesh.face_area(f));
    if (!(total > 0)) throw ValidationError("robot", "collision geometry has zero area");
    Philox rng = Philox::stream(seed, "robot-cloud");
    std::vector<Vec3> pts;
    pts.reserve(n);
    const double offset = rng.uniform01();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + offset) / static_cast<double>(n) * total;
        const auto f = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto& tri = mesh.faces[std::min(f, cdf.size() - 1)];
        const double r1 = std::sqrt(rng.uniform01());
        const double r2 = rng.uniform01();
        pts.push_back((1.0 - r1) * mesh.vertices[tri[0]] + r1 * (1.0 - r2) * mesh.vertices[tri[1]] +
                      r1 * r2 * mesh.vertices[tri[2]]);
    }
    return pts;
}

struct WorldAlignOptions {
    std::string robot_class = "a robot arm";
    double class_threshold = 0.5;  // cosine similarity for robot splat extraction
    std::size_t robot_points = 5000;
    std::uint64_t seed = 0;
};

struct WorldAlignResult {
    GaussianScene scene;  // in the robot (URDF) frame
    IcpResult icp;
    std::size_t robot_splats = 0;
};

/// Registers the scene to the robot model: robot-class splat centers are aligned by ICP to a
/// point cloud sampled from the URDF at q_default, then the whole scene is moved by the result.
inline WorldAlignResult align_world(const GaussianScene& scene, const RobotModel& robot, const JointConfig& q_default,
                                    const IcpParams& params = {}, const WorldAlignOptions& opts = {}) {
    const ClassSelection sel = extract_splats_by_class(scene, opts.robot_class, opts.class_threshold);
    if (sel.points.empty()) throw ValidationError("robot_class", "no splats match class '" + opts.robot_class + "'");
    const auto cloud = sample_robot_pointcloud(robot, q_default, opts.robot_points, opts.seed);
    WorldAlignResult out;
    out.robot_splats = sel.points.size();
    out.icp = icp_align(sel.points, cloud, RigidTransform::identity(), params);
    out.scene = transform_scene(scene, out.icp.transform);
    return out;
}

}  // namespace splatforge
