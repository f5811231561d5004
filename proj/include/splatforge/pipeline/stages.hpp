// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// One function per pipeline stage. Each reads its inputs from the config (or from the previous
// stage's outputs under the output directory), writes its outputs there and returns a JSON
// summary. Outputs depend only on the config and seed; wall-clock times appear only in the
// dataset's meta.json.
//
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "splatforge/annotation/annotate.hpp"
#include "splatforge/assets/interactive_asset.hpp"
#include "splatforge/core/image_io.hpp"
#include "splatforge/demo/dataset.hpp"
#include "splatforge/pipeline/config.hpp"
#include "splatforge/registration/camera_align.hpp"
#include "splatforge/registration/world_align.hpp"
#include "splatforge/scene/splat_ply.hpp"
#include "splatforge/semantics/supervision.hpp"

namespace splatforge {

/// Locations of stage outputs under the output directory.
struct PipelineLayout {
    std::filesystem::path root;

    std::filesystem::path feature_scene() const { return root / "features" / "scene.ply"; }
    std::filesystem::path feature_loss() const { return root / "features" / "loss.json"; }
    std::filesystem::path aligned_scene() const { return root / "aligned" / "scene.ply"; }
    std::filesystem::path scene_transform() const { return root / "aligned" / "T_scene.json"; }
    std::filesystem::path icp_report() const { return root / "aligned" / "icp_report.json"; }
    std::filesystem::path camera_pose() const { return root / "camera" / "pose.json"; }
    std::filesystem::path camera_trace() const { return root / "camera" / "loss_trace.json"; }
    std::filesystem::path dataset() const { return root / "dataset"; }
};

namespace detail {

/// A path named in the config must exist when its stage starts.
inline std::filesystem::path require_config_path(const PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (value.empty()) throw ConfigError(key + ": not set");
    const auto p = cfg.resolve(value);
    if (!std::filesystem::exists(p)) throw ConfigError(key + ": file not found: " + p.string());
    return p;
}

/// An output of an earlier stage.
inline const std::filesystem::path& require_stage_output(const std::filesystem::path& p, const char* producer) {
    if (!std::filesystem::exists(p)) throw IoError("missing " + p.string() + " (run '" + producer + "' first)");
    return p;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + path.string());
}

inline void ensure_parent(const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
}

inline JointConfig joint_vector(const std::vector<double>& v, const RobotModel& robot, const std::string& key) {
    if (v.empty()) return JointConfig::Zero(robot.dof());
    if (static_cast<int>(v.size()) != robot.dof())
        throw ConfigError(key + ": expected " + std::to_string(robot.dof()) + " values, got " + std::to_string(v.size()));
    return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline CameraModel read_camera_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open camera file " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        CameraModel c = j.get<CameraModel>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace detail

/// Trains per-splat semantic features against the supervision masks.
inline nlohmann::json stage_train_features(const PipelineConfig& cfg, int threads) {
    const auto scene_path = detail::require_config_path(cfg, "paths.scene", cfg.paths.scene);
    const auto labels_path = detail::require_config_path(cfg, "paths.label_table", cfg.paths.label_table);
    if (cfg.paths.supervision.empty()) throw ConfigError("paths.supervision: at least one view is required");
    std::vector<SupervisionView> views;
    for (std::size_t i = 0; i < cfg.paths.supervision.size(); ++i)
        views.push_back(load_supervision_view(
            detail::require_config_path(cfg, "paths.supervision[" + std::to_string(i) + "]", cfg.paths.supervision[i])));
    GaussianScene scene = load_splat_ply(scene_path, {cfg.features.feature_dim});
    scene.label_table = load_label_table(labels_path);
    for (const auto& [name, e] : scene.label_table)
        if (e.size() != scene.feature_dim)
            throw ConfigError("paths.label_table: embedding '" + name + "' has length " + std::to_string(e.size()) + ", scene features have " +
                              std::to_string(scene.feature_dim));
    FeatureTrainConfig tc = cfg.feature_train_config();
    tc.render.threads = threads;
    FeatureTrainReport report;
    const GaussianScene trained = train_features(scene, views, tc, &report);
    const PipelineLayout out{cfg.output_dir()};
    detail::ensure_parent(out.feature_scene());
    save_splat_ply(trained, out.feature_scene());
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [it, loss] : report.loss_trace) trace.push_back({{"iteration", it}, {"loss", loss}});
    detail::write_json_file(out.feature_loss(), {{"loss_trace", trace}});
    return {{"scene", out.feature_scene().string()},
            {"splats", trained.size()},
            {"final_loss", report.loss_trace.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.loss_trace.back().second)}};
}

/// Loads a robot: a URDF path, or the builtin demo arm.
inline RobotModel load_pipeline_robot(const PipelineConfig& cfg, const std::string& key, const std::string& spec) {
    if (spec == kBuiltinDemoArm) return builtin_demo_arm();
    return load_urdf(detail::require_config_path(cfg, key, spec));
}

/// Registers the trained scene to the robot model and writes the aligned scene.
inline nlohmann::json stage_align(const PipelineConfig& cfg) {
    const RobotModel robot = load_pipeline_robot(cfg, "paths.robot", cfg.paths.robot);
    const PipelineLayout out{cfg.output_dir()};
    GaussianScene scene = load_splat_ply(detail::require_stage_output(out.feature_scene(), "train-features"));
    scene.label_table = load_label_table(detail::require_config_path(cfg, "paths.label_table", cfg.paths.label_table));
    WorldAlignOptions opts;
    opts.robot_class = cfg.world_align.robot_class;
    opts.class_threshold = cfg.world_align.class_threshold;
    opts.robot_points = cfg.world_align.robot_points;
    opts.seed = cfg.base_seed;
    const JointConfig q = detail::joint_vector(cfg.world_align.default_joints, robot, "world_align.default_joints");
    const WorldAlignResult r = align_world(scene, robot, q, cfg.icp, opts);
    detail::ensure_parent(out.aligned_scene());
    save_splat_ply(r.scene, out.aligned_scene());
    detail::write_json_file(out.scene_transform(), {{"T_scene", to_json_matrix(r.icp.transform)}});
    nlohmann::json report = to_json_report(r.icp);
    report["robot_splats"] = r.robot_splats;
    detail::write_json_file(out.icp_report(), report);
    return {{"scene", out.aligned_scene().string()}, {"robot_splats", r.robot_splats}, {"T_scene", to_json_matrix(r.icp.transform)}};
}

/// Optimizes a camera pose against a real image of the aligned scene.
inline nlohmann::json stage_align_camera(const PipelineConfig& cfg, const std::filesystem::path& image_path,
                                         const std::filesystem::path& init_pose_path, int threads) {
    if (!std::filesystem::exists(image_path)) throw ConfigError("--image: file not found: " + image_path.string());
    const CameraModel init = detail::read_camera_file(init_pose_path);
    const PipelineLayout out{cfg.output_dir()};
    const GaussianScene scene = load_splat_ply(detail::require_stage_output(out.aligned_scene(), "align"));
    ImageD image = read_image(image_path);
    if (image.channels == 4) {
        ImageD rgb(image.width, image.height, 3);
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = image.at(x, y, c);
        image = std::move(rgb);
    }
    RenderOptions ro;
    ro.threads = threads;
    const CamAlignResult r = align_camera(scene, image, init, cfg.camera_align, ro);
    detail::write_json_file(out.camera_pose(), r.camera);
    detail::write_json_file(out.camera_trace(), to_json_report(r));
    return {{"pose", out.camera_pose().string()}, {"final_loss", r.final_loss}, {"iterations", r.iterations}};
}

/// Annotates one part-labelled mesh and writes its asset bundle.
inline nlohmann::json stage_annotate(const PipelineConfig& cfg, const std::string& asset_name, std::shared_ptr<ChatBackend> backend) {
    const auto it = cfg.paths.assets.find(asset_name);
    if (it == cfg.paths.assets.end()) throw ConfigError("paths.assets: no asset named '" + asset_name + "'");
    const TriangleMesh mesh = load_mesh(detail::require_config_path(cfg, "paths.assets." + asset_name, it->second));
    AnnotationClient client(cfg.annotation.client, std::move(backend));
    const AnnotationResult r = annotate_mesh(mesh, asset_name, client, cfg.annotation.view_resolution);
    const auto dir = export_asset_bundle(r.asset, asset_name, cfg.output_dir());
    nlohmann::json proposal = {{"category", r.proposal.category}, {"joint_type", to_string(r.proposal.joint_type)}};
    if (r.proposal.part_labels) proposal["parts"] = {r.proposal.part_labels->first, r.proposal.part_labels->second};
    detail::write_json_file(dir / "proposal.json", proposal);
    return {{"bundle", dir.string()}, {"category", r.proposal.category}, {"joint_type", to_string(r.proposal.joint_type)}};
}

/// Background for generation: the aligned scene without the robot's own splats (the robot is
/// re-rendered from its links), or the builtin tabletop.
inline GaussianScene generation_background(const PipelineConfig& cfg) {
    if (cfg.generation.background == kBuiltinBackground) return builtin_tabletop_scene();
    const PipelineLayout out{cfg.output_dir()};
    GaussianScene scene = load_splat_ply(detail::require_stage_output(out.aligned_scene(), "align"));
    scene.label_table = load_label_table(detail::require_config_path(cfg, "paths.label_table", cfg.paths.label_table));
    const ClassSelection robot = extract_splats_by_class(scene, cfg.world_align.robot_class, cfg.world_align.class_threshold);
    std::vector<bool> drop(scene.size(), false);
    for (const auto i : robot.indices) drop[i] = true;
    GaussianScene bg;
    bg.sh_degree = scene.sh_degree;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (!drop[i]) {
            GaussianSplat s = scene.splats[i];
            s.feature.resize(0);
            bg.splats.push_back(std::move(s));
        }
    return bg;
}

inline DemoWorld pipeline_world(const PipelineConfig& cfg) {
    const auto& g = cfg.generation;
    DemoWorld w;
    w.robot = load_pipeline_robot(cfg, "generation.robot", g.robot);
    w.tool_link = g.tool_link;
    if (g.home.empty())
        w.home = g.robot == kBuiltinDemoArm ? demo_arm_home() : JointConfig::Zero(w.robot.dof());
    else
        w.home = detail::joint_vector(g.home, w.robot, "generation.home");
    w.assets = builtin_assets();
    for (const auto& [name, dir] : g.asset_bundles)
        w.assets[name] = load_asset_bundle(detail::require_config_path(cfg, "generation.asset_bundles." + name, dir));
    w.background = generation_background(cfg);
    w.cameras = g.cameras.empty() ? builtin_cameras(g.demo.image_width, g.demo.image_height) : g.cameras;
    for (const auto& c : w.cameras) c.validate();
    try {
        w.validate();
        for (const auto& t : cfg.tasks) t.validate(&w.assets);
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("generation: ") + e.what());
    }
    return w;
}

/// Generates the demonstration dataset and returns its report.
inline nlohmann::json stage_generate(const PipelineConfig& cfg) {
    const DemoWorld world = pipeline_world(cfg);
    const PipelineLayout out{cfg.output_dir()};
    const GenerationReport r = generate_dataset(world, cfg.tasks, cfg.augmentation_config(), cfg.generation.demo, cfg.generation.episodes,
                                                out.dataset(), cfg.generation.workers);
    nlohmann::json j = to_json_value(r);
    j.erase("episode_summaries");
    j["dataset"] = out.dataset().string();
    return j;
}

/// Renders one frame of a scene (default: the aligned scene) from a camera file.
inline nlohmann::json stage_render(const PipelineConfig& cfg, const std::filesystem::path& camera_path, const std::filesystem::path& out_path,
                                   const std::filesystem::path& scene_path, int threads) {
    const CameraModel cam = detail::read_camera_file(camera_path);
    const PipelineLayout out{cfg.output_dir()};
    std::filesystem::path src = scene_path;
    if (src.empty())
        src = detail::require_stage_output(out.aligned_scene(), "align");
    else if (!std::filesystem::exists(src))
        throw ConfigError("--scene: file not found: " + src.string());
    const GaussianScene scene = load_splat_ply(src);
    RenderOptions ro;
    ro.threads = threads;
    const Image8 img = to_8bit(rasterize(scene, cam, ro).color);
    detail::ensure_parent(out_path);
    write_png(out_path, img);
    return {{"image", out_path.string()}, {"width", img.width}, {"height", img.height}};
}

}  // namespace splatforge
