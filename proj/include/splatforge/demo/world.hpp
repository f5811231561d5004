// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Read-only inputs shared by every episode (robot, asset library, static background, base
// cameras) and the renderer that turns a recorded frame into images.
//
#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/json_fields.hpp"
#include "splatforge/demo/builtin.hpp"
#include "splatforge/demo/episode.hpp"
#include "splatforge/render/rasterizer.hpp"

namespace splatforge {

struct DemoConfig {
    double control_rate_hz = 20.0;
    double grasp_tolerance = 0.015;   // m, tool point to object center
    int max_steps = 400;              // control steps per episode
    double max_joint_speed = 1.5;     // rad/s or m/s per joint
    double max_tool_speed = 0.35;     // m/s
    double approach_height = 0.1;     // m above grasp and place targets
    double cartesian_step = 0.02;     // m between IK sub-targets along a tool path
    double push_overshoot = 0.005;    // joint units past the lower limit when pushing
    int gripper_steps = 4;            // control steps to open or close the gripper
    int placement_attempts = 100;
    int image_width = 64;
    int image_height = 48;
    bool render = true;

    double dt() const { return 1.0 / control_rate_hz; }

    void validate() const {
        if (!(control_rate_hz > 0) || !std::isfinite(control_rate_hz)) throw ConfigError("generation.control_rate_hz: must be > 0");
        if (!(grasp_tolerance >= 0)) throw ConfigError("generation.grasp_tolerance: must be >= 0");
        if (max_steps <= 0) throw ConfigError("generation.max_steps: must be > 0");
        if (!(max_joint_speed > 0) || !(max_tool_speed > 0)) throw ConfigError("generation: speeds must be > 0");
        if (!(approach_height >= 0)) throw ConfigError("generation.approach_height: must be >= 0");
        if (!(cartesian_step > 0)) throw ConfigError("generation.cartesian_step: must be > 0");
        if (!(push_overshoot >= 0)) throw ConfigError("generation.push_overshoot: must be >= 0");
        if (gripper_steps <= 0) throw ConfigError("generation.gripper_steps: must be > 0");
        if (placement_attempts <= 0) throw ConfigError("generation.placement_attempts: must be > 0");
        if (image_width <= 0 || image_height <= 0) throw ConfigError("generation.image size: must be > 0");
    }
};

inline void to_json(nlohmann::json& j, const DemoConfig& c) {
    j = {{"control_rate_hz", c.control_rate_hz}, {"grasp_tolerance", c.grasp_tolerance}, {"max_steps", c.max_steps},
         {"max_joint_speed", c.max_joint_speed}, {"max_tool_speed", c.max_tool_speed}, {"approach_height", c.approach_height},
         {"cartesian_step", c.cartesian_step},   {"push_overshoot", c.push_overshoot},   {"gripper_steps", c.gripper_steps},
         {"placement_attempts", c.placement_attempts}, {"image_width", c.image_width}, {"image_height", c.image_height},
         {"render", c.render}};
}

/// Reads the keys of DemoConfig from `f` (shared with the generation config section).
inline void read_demo_config_fields(JsonFields& f, DemoConfig& c) {
    f.get("control_rate_hz", c.control_rate_hz).get("grasp_tolerance", c.grasp_tolerance).get("max_steps", c.max_steps);
    f.get("max_joint_speed", c.max_joint_speed).get("max_tool_speed", c.max_tool_speed).get("approach_height", c.approach_height);
    f.get("cartesian_step", c.cartesian_step).get("push_overshoot", c.push_overshoot).get("gripper_steps", c.gripper_steps);
    f.get("placement_attempts", c.placement_attempts).get("image_width", c.image_width).get("image_height", c.image_height);
    f.get("render", c.render);
}

/// Everything an episode reads but never modifies.
struct DemoWorld {
    RobotModel robot;
    std::string tool_link = "tool";
    JointConfig home;
    std::map<std::string, InteractiveAsset> assets;
    GaussianScene background;
    std::vector<CameraModel> cameras;
    Vec3 render_background = Vec3(0.85, 0.88, 0.92);

    void validate() const {
        robot.link(tool_link);
        robot.check_config(home, true);
        if (cameras.empty()) throw ConfigError("generation.cameras: at least one camera is required");
        for (const auto& [name, a] : assets) a.validate();
    }
};

inline DemoWorld make_builtin_world(const DemoConfig& cfg = {}) {
    DemoWorld w;
    w.robot = builtin_demo_arm();
    w.home = demo_arm_home();
    w.assets = builtin_assets();
    w.background = builtin_tabletop_scene();
    w.cameras = builtin_cameras(cfg.image_width, cfg.image_height);
    return w;
}

// ---- episode splats --------------------------------------------------------------------------

/// Per-episode splat set: lighting-augmented copies of the background, every object part and
/// every robot link, each group in its own frame.
struct EpisodeSplats {
    GaussianScene background;
    std::vector<SplatGroup> objects;  // (role, part label)
    std::vector<SplatGroup> links;    // (empty, link name)
};

inline constexpr double kObjectSplatDensity = 6000.0;  // per m²
inline constexpr double kRobotSplatDensity = 1500.0;

/// Rebuilds the scene state of the initial placements.
inline SceneState initial_scene_state(const DemoWorld& world, const std::vector<PlacedObject>& placements) {
    SceneState s;
    for (const auto& p : placements) {
        const auto it = world.assets.find(p.asset);
        if (it == world.assets.end()) throw ValidationError("asset", "unknown asset '" + p.asset + "'");
        SceneObject o;
        o.name = p.role;
        o.asset = scale_asset(it->second, p.placement.uniform_scale);
        o.scale = p.placement.uniform_scale;
        o.pose = p.placement.pose;
        o.joint = p.joint;
        s.objects.push_back(std::move(o));
    }
    return s;
}

/// Scene state at a recorded frame.
inline SceneState frame_scene_state(SceneState s, const Frame& f) {
    for (auto& o : s.objects) {
        const auto it = f.objects.find(o.name);
        if (it == f.objects.end()) throw ValidationError("frame.objects", "frame has no state for '" + o.name + "'");
        o.pose = it->second.pose;
        o.joint = it->second.joint;
    }
    return s;
}

/// Builds the proxies for the episode's objects and robot and applies the episode's lighting
/// draw. The draw is replayed from the stream, so the result depends only on the seed and the
/// recorded placements.
inline EpisodeSplats build_episode_splats(const DemoWorld& world, const std::vector<PlacedObject>& placements,
                                          const LightingAugmentConfig& lighting, std::uint64_t seed, LightingDraw* drawn = nullptr) {
    const int deg = world.background.sh_degree;
    const SceneState initial = initial_scene_state(world, placements);
    GaussianScene all = world.background;
    std::vector<SplatGroup> objects, links;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const auto& o = initial.objects[i];
        const Vec3 color = builtin_asset_color(placements[i].asset);
        for (const auto& [label, mesh] : o.asset.parts) {
            const bool mobile = o.asset.articulation && o.asset.articulation->mobile_label == label;
            objects.push_back({o.name, label,
                               surface_splats(mesh, mobile ? Vec3(0.8 * color) : color, kObjectSplatDensity, 24, deg,
                                              fnv1a64(placements[i].asset + "/" + label))});
        }
    }
    for (const auto& l : world.robot.links) {
        if (l.collision_mesh.empty()) continue;
        links.push_back({"", l.name, surface_splats(l.collision_mesh, Vec3(0.78, 0.78, 0.8), kRobotSplatDensity, 16, deg, fnv1a64(l.name))});
    }
    for (const auto* groups : {&objects, &links})
        for (const auto& g : *groups) all.splats.insert(all.splats.end(), g.splats.begin(), g.splats.end());
    Philox rng = Philox::stream(seed, "lighting");
    GaussianScene lit = augment_lighting(all, lighting, rng, drawn);
    EpisodeSplats out;
    std::size_t k = world.background.splats.size();
    out.background = world.background;
    out.background.splats.assign(lit.splats.begin(), lit.splats.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto* groups : {&objects, &links})
        for (auto& g : *groups) {
            for (auto& s : g.splats) s = lit.splats[k++];
        }
    out.objects = std::move(objects);
    out.links = std::move(links);
    return out;
}

/// Renders one recorded frame from every camera (8-bit RGB).
inline std::vector<Image8> render_frame(const DemoWorld& world, const EpisodeSplats& splats, const SceneState& initial,
                                        const Frame& frame, const std::vector<CameraModel>& cameras, int threads = 1) {
    const SceneState s = frame_scene_state(initial, frame);
    GaussianScene scene;
    scene.sh_degree = splats.background.sh_degree;
    scene.splats = splats.background.splats;
    for (const auto& g : splats.objects) append_posed(scene.splats, g.splats, s.object(g.object).part_pose(g.part));
    const auto poses = link_poses(world.robot, frame.joint_config);
    for (const auto& g : splats.links) append_posed(scene.splats, g.splats, poses[world.robot.link_index.at(g.part)]);
    RenderOptions opts;
    opts.background = world.render_background;
    opts.threads = threads;
    opts.tile_size = 8;
    std::vector<Image8> out;
    for (const auto& cam : cameras) out.push_back(to_8bit(rasterize(scene, cam, opts).color));
    return out;
}

}  // namespace splatforge
