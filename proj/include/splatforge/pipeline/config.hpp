// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// The single pipeline configuration file: input paths, one section per stage and the base
// seed. Reading is strict (unknown keys are errors); absent keys keep their defaults.
//
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/annotation/client.hpp"
#include "splatforge/augment/augmentation.hpp"
#include "splatforge/core/json_fields.hpp"
#include "splatforge/demo/task.hpp"
#include "splatforge/demo/world.hpp"
#include "splatforge/registration/camera_align.hpp"
#include "splatforge/registration/icp.hpp"
#include "splatforge/semantics/feature_field.hpp"

namespace splatforge {

inline constexpr const char* kBuiltinDemoArm = "builtin:demo_arm";
inline constexpr const char* kBuiltinBackground = "builtin:tabletop";

struct PipelinePaths {
    std::string scene;                         // input splat PLY
    std::string robot;                         // robot URDF used for world alignment
    std::string label_table;                   // class name → embedding
    std::vector<std::string> supervision;      // mask PNGs, each with a .json sidecar
    std::map<std::string, std::string> assets; // asset name → part-labelled OBJ
    std::string mock_fixtures;                 // annotation replies used with --mock
    std::string output = "out";
};

struct FeatureSection {
    int feature_dim = 8;  // allocated when the scene PLY carries no features
    double learning_rate = 0.05;
    int iterations = 500;
    double temperature = 0.07;
    int batch_pixels = 4096;
    int eval_every = 50;
};

struct WorldAlignSection {
    std::string robot_class = "a robot arm";
    double class_threshold = 0.5;
    std::size_t robot_points = 5000;
    std::vector<double> default_joints;  // empty: all zeros
};

struct AnnotationSection {
    AnnotationClientConfig client;
    int view_resolution = 256;
};

struct GenerationSection {
    DemoConfig demo;
    std::size_t episodes = 10;
    int workers = 1;
    std::string robot = kBuiltinDemoArm;  // URDF path or builtin:demo_arm
    std::string tool_link = "tool";
    std::vector<double> home;             // empty: builtin home pose, or zeros for a URDF robot
    std::string background = "aligned";   // "aligned" (robot splats removed) or builtin:tabletop
    std::vector<CameraModel> cameras;     // empty: builtin cameras at the configured image size
    std::map<std::string, std::string> asset_bundles;  // extra assets: name → bundle directory
};

struct PipelineConfig {
    std::filesystem::path base_dir = ".";  // relative paths resolve against it; not serialized
    std::uint64_t base_seed = 0;
    std::string log_level = "info";
    PipelinePaths paths;
    FeatureSection features;
    IcpParams icp;
    WorldAlignSection world_align;
    CamAlignParams camera_align;
    AnnotationSection annotation;
    AugmentationConfig augmentation;
    std::vector<TaskSpec> tasks{default_task(TaskKind::pick_place)};
    GenerationSection generation;

    /// A configured path resolved against base_dir (absolute paths unchanged).
    std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path q(p);
        return q.is_absolute() ? q : base_dir / q;
    }
    std::filesystem::path output_dir() const { return resolve(paths.output); }

    FeatureTrainConfig feature_train_config() const {
        FeatureTrainConfig c;
        c.learning_rate = features.learning_rate;
        c.iterations = features.iterations;
        c.temperature = features.temperature;
        c.batch_pixels = features.batch_pixels;
        c.eval_every = features.eval_every;
        c.seed = base_seed;
        return c;
    }

    AugmentationConfig augmentation_config() const {
        AugmentationConfig a = augmentation;
        a.base_seed = base_seed;
        return a;
    }

    void validate() const {
        if (paths.output.empty()) throw ConfigError("paths.output: must not be empty");
        if (features.feature_dim < 2) throw ConfigError("features.feature_dim: must be >= 2");
        feature_train_config().validate();
        icp.validate();
        camera_align.validate();
        annotation.client.validate();
        if (annotation.view_resolution < 8) throw ConfigError("annotation.view_resolution: must be >= 8");
        if (!(world_align.class_threshold >= -1 && world_align.class_threshold <= 1))
            throw ConfigError("world_align.class_threshold: must be in [-1, 1]");
        if (world_align.robot_points == 0) throw ConfigError("world_align.robot_points: must be > 0");
        augmentation.validate();
        if (tasks.empty()) throw ConfigError("tasks: at least one task is required");
        for (const auto& t : tasks) t.validate();
        generation.demo.validate();
        if (generation.workers <= 0) throw ConfigError("generation.workers: must be > 0");
        if (generation.background != "aligned" && generation.background != kBuiltinBackground)
            throw ConfigError(std::string("generation.background: must be 'aligned' or '") + kBuiltinBackground + "'");
        if (log_level != "debug" && log_level != "info" && log_level != "warn" && log_level != "error")
            throw ConfigError("log_level: must be debug, info, warn or error");
    }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    nlohmann::json aug = c.augmentation;
    aug.erase("base_seed");  // the top-level base_seed is the only seed
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : c.tasks) tasks.push_back(to_json_value(t));
    nlohmann::json gen = c.generation.demo;
    gen["episodes"] = c.generation.episodes;
    gen["workers"] = c.generation.workers;
    gen["robot"] = c.generation.robot;
    gen["tool_link"] = c.generation.tool_link;
    gen["home"] = c.generation.home;
    gen["background"] = c.generation.background;
    gen["cameras"] = c.generation.cameras;
    gen["asset_bundles"] = c.generation.asset_bundles;
    nlohmann::json annotation = c.annotation.client;
    annotation["view_resolution"] = c.annotation.view_resolution;
    j = {{"base_seed", c.base_seed},
         {"log_level", c.log_level},
         {"paths",
          {{"scene", c.paths.scene},
           {"robot", c.paths.robot},
           {"label_table", c.paths.label_table},
           {"supervision", c.paths.supervision},
           {"assets", c.paths.assets},
           {"mock_fixtures", c.paths.mock_fixtures},
           {"output", c.paths.output}}},
         {"features",
          {{"feature_dim", c.features.feature_dim},
           {"learning_rate", c.features.learning_rate},
           {"iterations", c.features.iterations},
           {"temperature", c.features.temperature},
           {"batch_pixels", c.features.batch_pixels},
           {"eval_every", c.features.eval_every}}},
         {"icp", c.icp},
         {"world_align",
          {{"robot_class", c.world_align.robot_class},
           {"class_threshold", c.world_align.class_threshold},
           {"robot_points", c.world_align.robot_points},
           {"default_joints", c.world_align.default_joints}}},
         {"camera_align", c.camera_align},
         {"annotation", annotation},
         {"augmentation", aug},
         {"tasks", tasks},
         {"generation", gen}};
}

/// Parses a config document. `base_dir` anchors relative paths (normally the file's directory).
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    PipelineConfig c;
    c.base_dir = base_dir;
    JsonFields f(j, "");
    f.get("base_seed", c.base_seed).get("log_level", c.log_level);
    if (const auto* p = f.child("paths")) {
        JsonFields g(*p, "paths");
        g.get("scene", c.paths.scene).get("robot", c.paths.robot).get("label_table", c.paths.label_table);
        g.get("supervision", c.paths.supervision).get("assets", c.paths.assets).get("mock_fixtures", c.paths.mock_fixtures);
        g.get("output", c.paths.output).finish();
    }
    if (const auto* p = f.child("features")) {
        JsonFields g(*p, "features");
        g.get("feature_dim", c.features.feature_dim).get("learning_rate", c.features.learning_rate);
        g.get("iterations", c.features.iterations).get("temperature", c.features.temperature);
        g.get("batch_pixels", c.features.batch_pixels).get("eval_every", c.features.eval_every).finish();
    }
    if (const auto* p = f.child("icp")) c.icp = icp_params_from_json(*p, "icp");
    if (const auto* p = f.child("world_align")) {
        JsonFields g(*p, "world_align");
        g.get("robot_class", c.world_align.robot_class).get("class_threshold", c.world_align.class_threshold);
        g.get("robot_points", c.world_align.robot_points).get("default_joints", c.world_align.default_joints).finish();
    }
    if (const auto* p = f.child("camera_align")) c.camera_align = cam_align_params_from_json(*p, "camera_align");
    if (const auto* p = f.child("annotation")) {
        nlohmann::json client = *p;
        if (client.is_object() && client.contains("view_resolution")) {
            JsonFields g(client, "annotation");
            g.get("view_resolution", c.annotation.view_resolution);
            client.erase("view_resolution");
        }
        c.annotation.client = annotation_client_config_from_json(client, "annotation");
    }
    if (const auto* p = f.child("augmentation")) {
        if (p->is_object() && p->contains("base_seed"))
            throw ConfigError("augmentation.base_seed: use the top-level base_seed");
        c.augmentation = augmentation_config_from_json(*p, "augmentation");
    }
    if (const auto* p = f.child("tasks")) {
        if (!p->is_array()) throw ConfigError("tasks: expected an array");
        c.tasks.clear();
        for (std::size_t i = 0; i < p->size(); ++i) c.tasks.push_back(task_spec_from_json((*p)[i], "tasks[" + std::to_string(i) + "]"));
    }
    if (const auto* p = f.child("generation")) {
        JsonFields g(*p, "generation");
        read_demo_config_fields(g, c.generation.demo);
        g.get("episodes", c.generation.episodes).get("workers", c.generation.workers).get("robot", c.generation.robot);
        g.get("tool_link", c.generation.tool_link).get("home", c.generation.home).get("background", c.generation.background);
        g.get("cameras", c.generation.cameras).get("asset_bundles", c.generation.asset_bundles);
        g.finish();
    }
    f.finish();
    c.validate();
    return c;
}

/// Reads the config file; a missing or malformed file is a ConfigError naming the path.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return pipeline_config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace splatforge
