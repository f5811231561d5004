// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Writes the toy end-to-end fixture: a two-link robot on a table captured in a scene frame
// offset from the robot frame by a known transform, class masks for feature training, a
// part-labelled cabinet mesh, a camera-alignment target and the expected stage results.
//
// Usage: make_toy_fixture <output dir>
//
#include <cstdio>
#include <fstream>

#include "splatforge/core/image_io.hpp"
#include "splatforge/demo/scene_state.hpp"
#include "splatforge/demo/builtin.hpp"
#include "splatforge/kinematics/urdf.hpp"
#include "splatforge/render/rasterizer.hpp"
#include "splatforge/scene/scene_transform.hpp"
#include "splatforge/scene/splat_ply.hpp"
#include "splatforge/semantics/supervision.hpp"

namespace {

using namespace splatforge;
namespace fs = std::filesystem;

constexpr const char* kRobotUrdf = R"(<?xml version="1.0"?>
<robot name="toy_arm">
  <link name="base">
    <visual><origin xyz="0 0 0.03"/><geometry><box size="0.12 0.12 0.06"/></geometry></visual>
    <collision><origin xyz="0 0 0.03"/><geometry><box size="0.12 0.12 0.06"/></geometry></collision>
  </link>
  <link name="upper">
    <visual><origin xyz="0.15 0 0"/><geometry><box size="0.3 0.06 0.05"/></geometry></visual>
    <collision><origin xyz="0.15 0 0"/><geometry><box size="0.3 0.06 0.05"/></geometry></collision>
  </link>
  <link name="lower">
    <visual><origin xyz="0.12 0 0"/><geometry><box size="0.24 0.04 0.04"/></geometry></visual>
    <collision><origin xyz="0.12 0 0"/><geometry><box size="0.24 0.04 0.04"/></geometry></collision>
  </link>
  <joint name="shoulder" type="revolute">
    <parent link="base"/><child link="upper"/>
    <origin xyz="0 0 0.085"/><axis xyz="0 0 1"/><limit lower="-3" upper="3" effort="10" velocity="1"/>
  </joint>
  <joint name="elbow" type="revolute">
    <parent link="upper"/><child link="lower"/>
    <origin xyz="0.3 0 0.045"/><axis xyz="0 0 1"/><limit lower="-2.5" upper="2.5" effort="10" velocity="1"/>
  </joint>
</robot>
)";

constexpr int kFeatureDim = 4;
const std::vector<double> kDefaultJoints{0.5, -1.1};

RigidTransform true_scene_to_robot() {
    return {so3_exp(Vec3(0.06, -0.1, 0.12)), Vec3(0.05, -0.03, 0.02)};
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

// Ground-truth class mask: class c where its splats alone reach alpha > 0.5; the nearer class
// wins where both do.
Image<int> class_mask(const std::vector<GaussianScene>& classes, const CameraModel& cam) {
    RenderOptions o;
    o.threads = 1;
    std::vector<RenderOutput> alone;
    std::vector<double> depth;
    for (const auto& c : classes) {
        alone.push_back(rasterize(c, cam, o));
        Vec3 m = Vec3::Zero();
        for (const auto& g : c.splats) m += g.position;
        depth.push_back(cam.world_to_camera.apply(m / static_cast<double>(c.size())).z());
    }
    Image<int> mask(cam.width, cam.height, 1, kUnlabeled);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            int best = kUnlabeled;
            for (int c = 0; c < static_cast<int>(classes.size()); ++c)
                if (alone[c].alpha.at(x, y) > 0.5 && (best == kUnlabeled || depth[c] < depth[best])) best = c;
            mask.at(x, y) = best;
        }
    return mask;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: make_toy_fixture <output dir>\n");
        return 2;
    }
    const fs::path dir = argv[1];
    fs::create_directories(dir / "views");
    fs::create_directories(dir / "assets");
    fs::create_directories(dir / "camera");

    write_text(dir / "robot.urdf", kRobotUrdf);
    RobotModel robot = parse_urdf(kRobotUrdf, "toy_arm");
    load_robot_geometry(robot, dir);
    const JointConfig q = Eigen::Map<const VecX>(kDefaultJoints.data(), 2);

    // Scene in the robot frame: table plus robot surface, then moved into the scene frame.
    GaussianScene table = builtin_tabletop_scene(0.06);
    GaussianScene arm;
    const auto poses = link_poses(robot, q);
    for (std::size_t l = 0; l < robot.links.size(); ++l)
        append_posed(arm.splats, surface_splats(robot.links[l].collision_mesh, Vec3(0.9, 0.45, 0.15), 5000, 40, 0, 17 + l), poses[l]);

    const RigidTransform robot_to_scene = true_scene_to_robot().inverse();
    GaussianScene scene;
    scene.feature_dim = kFeatureDim;
    for (const auto* part : {&arm, &table})
        for (const auto& g : transform_scene(*part, robot_to_scene).splats) {
            GaussianSplat h = g;
            h.feature = VecX::Zero(kFeatureDim);
            scene.splats.push_back(std::move(h));
        }
    save_splat_ply(scene, dir / "scene.ply");

    std::map<std::string, VecX> labels;
    for (int c = 0; c < kFeatureDim; ++c) {
        static const char* names[] = {"a robot arm", "table", "cabinet", "background"};
        labels[names[c]] = VecX::Unit(kFeatureDim, c);
    }
    save_label_table(labels, dir / "labels.json");

    // Supervision views in the scene frame, looking at the arm from around the table.
    const std::vector<GaussianScene> classes{transform_scene(arm, robot_to_scene), transform_scene(table, robot_to_scene)};
    nlohmann::json view_paths = nlohmann::json::array();
    for (int v = 0; v < 8; ++v) {
        const double a = -2.0 + 0.57 * v;
        const Vec3 eye_r(0.2 + 0.8 * std::cos(a), 0.8 * std::sin(a), v % 2 ? 0.25 : 0.6);
        SupervisionView view;
        view.camera = CameraModel::look_at(robot_to_scene.apply(eye_r), robot_to_scene.apply(Vec3(0.2, 0, 0.05)),
                                           robot_to_scene.rotation * Vec3(0, 0, -1), 58, 64, 48);
        view.class_ids = {{0, "a robot arm"}, {1, "table"}};
        view.mask = class_mask(classes, view.camera);
        const std::string name = "views/view_" + std::to_string(v) + ".png";
        save_supervision_view(view, dir / name);
        view_paths.push_back(name);
    }

    // Part-labelled cabinet for the annotation stage.
    TriangleMesh cabinet = make_box(Vec3(0.4, 0.3, 0.2), Vec3(0, 0, 0.1), "main cabinet");
    append_mesh(cabinet, make_box(Vec3(0.12, 0.24, 0.12), Vec3(0.16, 0, 0.1), "drawer body"));
    save_mesh(cabinet, dir / "assets" / "cabinet.obj");

    // Camera-alignment target: the robot-frame scene seen from a known camera, and a start pose
    // 3° / 3 cm away from it.
    const CameraModel truth = CameraModel::look_at(Vec3(0.9, -0.5, 0.6), Vec3(0.2, 0, 0.05), Vec3(0, 0, -1), 72, 80, 60);
    GaussianScene robot_frame = table;
    robot_frame.splats.insert(robot_frame.splats.end(), arm.splats.begin(), arm.splats.end());
    RenderOptions ro;
    ro.threads = 1;
    write_png(dir / "camera" / "target.png", to_8bit(rasterize(robot_frame, truth, ro).color));
    CameraModel init = truth;
    init.world_to_camera = compose(RigidTransform{so3_exp(Vec3(0.03, -0.035, 0.02)), Vec3(0.02, -0.015, 0.015)}, truth.world_to_camera);
    write_json(dir / "camera" / "true_pose.json", truth);
    write_json(dir / "camera" / "init_pose.json", init);

    nlohmann::json config = {
        {"base_seed", 7},
        {"log_level", "warn"},
        {"paths",
         {{"scene", "scene.ply"},
          {"robot", "robot.urdf"},
          {"label_table", "labels.json"},
          {"supervision", view_paths},
          {"assets", {{"toy_cabinet", "assets/cabinet.obj"}}},
          {"mock_fixtures", "../annotation/mock_fixtures.json"},
          {"output", "out"}}},
        {"features", {{"feature_dim", kFeatureDim}, {"iterations", 400}, {"batch_pixels", 2048}, {"eval_every", 50}}},
        {"world_align", {{"robot_class", "a robot arm"}, {"class_threshold", 0.5}, {"robot_points", 8000}, {"default_joints", kDefaultJoints}}},
        {"camera_align", {{"pyramid_levels", 3}, {"max_iterations", 60}}},
        {"annotation", {{"view_resolution", 64}}},
        {"tasks", nlohmann::json::array({{{"name", "pick_place"}}})},
        {"generation", {{"episodes", 4}, {"workers", 2}, {"image_width", 48}, {"image_height", 36}}}};
    write_json(dir / "config.json", config);

    nlohmann::json expected = {
        {"T_scene", to_json_matrix(true_scene_to_robot())},
        {"T_scene_tolerance", {{"rotation_deg", 0.5}, {"translation_m", 0.005}}},
        {"camera_pose", to_json_matrix(truth.world_to_camera)},
        {"camera_tolerance", {{"rotation_deg", 0.5}, {"translation_m", 0.005}}},
        {"annotate", {{"asset", "toy_cabinet"}, {"category", "cabinet"}, {"joint_type", "prismatic"}, {"parts", {"drawer body", "main cabinet"}}}},
        {"generate", {{"episodes", 4}, {"min_success_rate", 0.75}}}};
    write_json(dir / "expected.json", expected);
    std::printf("wrote %s (%zu splats)\n", dir.string().c_str(), scene.size());
    return 0;
}
