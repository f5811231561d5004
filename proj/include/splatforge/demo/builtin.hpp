// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Procedural stand-ins for the task objects, a small 6-DOF arm, a tabletop background and
// workspace cameras, so demonstration generation runs without external assets. Every object
// frame has its origin at the bottom center of the object with +z up.
//
#pragma once

#include <map>
#include <string>

#include "splatforge/assets/interactive_asset.hpp"
#include "splatforge/core/camera.hpp"
#include "splatforge/demo/scene_state.hpp"
#include "splatforge/kinematics/urdf.hpp"

namespace splatforge {

namespace detail {

inline TriangleMesh box_from(const Vec3& lo, const Vec3& hi) { return make_box(hi - lo, 0.5 * (lo + hi)); }

inline TriangleMesh join(std::initializer_list<TriangleMesh> parts) {
    TriangleMesh out;
    for (const auto& p : parts) append_mesh(out, p);
    return out;
}

inline InteractiveAsset rigid_asset(const std::string& label, TriangleMesh mesh, double density) {
    return make_interactive_asset({{label, std::move(mesh)}}, PhysicsProperties{density, 1e9, 0.3});
}

}  // namespace detail

/// Asset library keyed by name: red_cube, blue_cube, cube, box, bottle, plate, cabinet,
/// lidded_box, sponge, mat.
inline std::map<std::string, InteractiveAsset> builtin_assets() {
    using detail::box_from;
    std::map<std::string, InteractiveAsset> a;
    const TriangleMesh cube35 = make_box(Vec3::Constant(0.035), Vec3(0, 0, 0.0175));
    a["red_cube"] = detail::rigid_asset("red_cube", cube35, 700);
    a["blue_cube"] = detail::rigid_asset("blue_cube", cube35, 700);
    a["cube"] = detail::rigid_asset("cube", make_box(Vec3::Constant(0.04), Vec3(0, 0, 0.02)), 700);
    // Open container: floor plus four walls that do not overlap, so the union stays closed.
    const double w = 0.14, h = 0.06, t = 0.006, hw = w / 2;
    a["box"] = detail::rigid_asset(
        "box",
        detail::join({box_from({-hw, -hw, 0}, {hw, hw, t}), box_from({-hw, -hw, t}, {-hw + t, hw, h}),
                      box_from({hw - t, -hw, t}, {hw, hw, h}), box_from({-hw + t, -hw, t}, {hw - t, -hw + t, h}),
                      box_from({-hw + t, hw - t, t}, {hw - t, hw, h})}),
        500);
    a["bottle"] = detail::rigid_asset("bottle", transformed(make_cylinder(0.03, 0.18), RigidTransform::from_translation({0, 0, 0.09})), 400);
    a["plate"] = detail::rigid_asset("plate", box_from({-0.07, -0.07, 0}, {0.07, 0.07, 0.01}), 2400);
    a["sponge"] = detail::rigid_asset("sponge", box_from({-0.03, -0.02, 0}, {0.03, 0.02, 0.03}), 60);
    a["mat"] = detail::rigid_asset("mat", box_from({-0.1, -0.1, 0}, {0.1, 0.1, 0.004}), 1200);
    {
        // Drawer slides out along +x (toward the robot once placed facing it); closed at 0.
        const TriangleMesh body = box_from({-0.06, -0.1, 0}, {0.06, 0.1, 0.14});
        const TriangleMesh drawer =
            detail::join({box_from({-0.05, -0.08, 0.03}, {0.065, 0.08, 0.1}), box_from({0.065, -0.03, 0.055}, {0.08, 0.03, 0.075})});
        ArticulationSpec s{ArticulationType::prismatic, Vec3::UnitX(), Vec3(0.06, 0, 0.065), 0.0, 0.06, "drawer body", "main cabinet"};
        a["cabinet"] = make_interactive_asset({{"main cabinet", body}, {"drawer body", drawer}}, {600, 1.1e10, 0.3}, s);
    }
    {
        // Lid hinged along the back edge; positive angles lift the front edge.
        const TriangleMesh body = box_from({-0.08, -0.08, 0}, {0.08, 0.08, 0.08});
        const TriangleMesh lid = box_from({-0.08, -0.08, 0.08}, {0.08, 0.08, 0.09});
        ArticulationSpec s{ArticulationType::revolute, -Vec3::UnitY(), Vec3(-0.08, 0, 0.085), 0.0, 1.6, "lid", "box body"};
        a["lidded_box"] = make_interactive_asset({{"box body", body}, {"lid", lid}}, {500, 3e9, 0.35}, s);
    }
    return a;
}

/// Display colors for the built-in assets; unknown names render gray.
inline Vec3 builtin_asset_color(const std::string& name) {
    static const std::map<std::string, Vec3> colors{
        {"red_cube", {0.85, 0.1, 0.1}},  {"blue_cube", {0.1, 0.2, 0.85}}, {"cube", {0.9, 0.6, 0.1}},
        {"box", {0.55, 0.4, 0.25}},      {"bottle", {0.2, 0.7, 0.3}},     {"plate", {0.92, 0.92, 0.9}},
        {"cabinet", {0.6, 0.45, 0.3}},   {"lidded_box", {0.3, 0.5, 0.7}}, {"sponge", {0.95, 0.85, 0.2}},
        {"mat", {0.35, 0.35, 0.4}}};
    const auto it = colors.find(name);
    return it == colors.end() ? Vec3(0.6, 0.6, 0.6) : it->second;
}

/// A 6-DOF arm with primitive link geometry; end link "tool" is the grasp point between the
/// fingers, 0.12 m beyond the last wrist joint.
inline constexpr const char* kDemoArmUrdf = R"(<?xml version="1.0"?>
<robot name="demo_arm">
  <link name="base"><collision><origin xyz="0 0 0.05"/><geometry><cylinder radius="0.08" length="0.1"/></geometry></collision></link>
  <link name="shoulder"><collision><origin xyz="0 0 0.125"/><geometry><cylinder radius="0.05" length="0.25"/></geometry></collision></link>
  <link name="upper_arm"><collision><origin xyz="0 0 0.175"/><geometry><box size="0.07 0.06 0.35"/></geometry></collision></link>
  <link name="forearm"><collision><origin xyz="0 0 0.15"/><geometry><box size="0.05 0.05 0.3"/></geometry></collision></link>
  <link name="wrist_1"><collision><origin xyz="0 0 0.03"/><geometry><cylinder radius="0.035" length="0.06"/></geometry></collision></link>
  <link name="wrist_2"><collision><origin xyz="0 0 0.03"/><geometry><box size="0.05 0.05 0.06"/></geometry></collision></link>
  <link name="hand"><collision><origin xyz="0 0 0.04"/><geometry><box size="0.1 0.03 0.04"/></geometry></collision></link>
  <link name="tool"/>
  <joint name="j1" type="revolute"><parent link="base"/><child link="shoulder"/><origin xyz="0 0 0.1"/><axis xyz="0 0 1"/><limit lower="-3.1" upper="3.1" effort="50" velocity="2"/></joint>
  <joint name="j2" type="revolute"><parent link="shoulder"/><child link="upper_arm"/><origin xyz="0 0 0.25"/><axis xyz="0 1 0"/><limit lower="-2.6" upper="2.6" effort="50" velocity="2"/></joint>
  <joint name="j3" type="revolute"><parent link="upper_arm"/><child link="forearm"/><origin xyz="0 0 0.35"/><axis xyz="0 1 0"/><limit lower="-2.9" upper="2.9" effort="30" velocity="2"/></joint>
  <joint name="j4" type="revolute"><parent link="forearm"/><child link="wrist_1"/><origin xyz="0 0 0.3"/><axis xyz="0 0 1"/><limit lower="-6.2" upper="6.2" effort="10" velocity="3"/></joint>
  <joint name="j5" type="revolute"><parent link="wrist_1"/><child link="wrist_2"/><origin xyz="0 0 0.06"/><axis xyz="0 1 0"/><limit lower="-2.6" upper="2.6" effort="10" velocity="3"/></joint>
  <joint name="j6" type="revolute"><parent link="wrist_2"/><child link="hand"/><origin xyz="0 0 0.06"/><axis xyz="0 0 1"/><limit lower="-6.2" upper="6.2" effort="10" velocity="3"/></joint>
  <joint name="tool_joint" type="fixed"><parent link="hand"/><child link="tool"/><origin xyz="0 0 0.12"/></joint>
</robot>
)";

inline RobotModel builtin_demo_arm() {
    RobotModel r = parse_urdf(kDemoArmUrdf, "demo_arm");
    load_robot_geometry(r, ".");
    return r;
}

/// Joint configuration with the tool above the workspace in front of the robot.
inline JointConfig demo_arm_home() {
    JointConfig q(6);
    q << 0.0, 0.4, 1.3, 0.0, 1.2, 0.0;
    return q;
}

/// Flat tabletop at z = 0: a checkered grid of thin splats over [-0.4, 0.8] × [-0.6, 0.6].
inline GaussianScene builtin_tabletop_scene(double spacing = 0.04, int sh_degree = 0) {
    GaussianScene s;
    s.sh_degree = sh_degree;
    const Vec3 wood(0.62, 0.5, 0.36), dark(0.5, 0.4, 0.28);
    int i = 0;
    for (double x = -0.4; x <= 0.8 + 1e-9; x += spacing, ++i) {
        int j = 0;
        for (double y = -0.6; y <= 0.6 + 1e-9; y += spacing, ++j) {
            GaussianSplat g;
            g.position = Vec3(x, y, -0.002);
            g.log_scale = Vec3(std::log(0.6 * spacing), std::log(0.6 * spacing), std::log(0.002));
            g.opacity_logit = 4.0;
            g.sh = ShCoeffs::Zero(sh::coeff_count(sh_degree), 3);
            g.sh.row(0) = rgb_to_sh0(((i + j) % 2) ? wood : dark).transpose();
            s.splats.push_back(std::move(g));
        }
    }
    return s;
}

/// Two workspace cameras: one facing the robot from the front, one from the side.
inline std::vector<CameraModel> builtin_cameras(int width = 64, int height = 48) {
    const double f = 0.9 * width;
    return {CameraModel::look_at(Vec3(0.95, 0.0, 0.55), Vec3(0.25, 0, 0.05), Vec3(0, 0, -1), f, width, height),
            CameraModel::look_at(Vec3(0.3, -0.8, 0.5), Vec3(0.3, 0, 0.05), Vec3(0, 0, -1), f, width, height)};
}

}  // namespace splatforge
