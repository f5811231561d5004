// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: one subcommand per pipeline stage. Exit codes: 0 success,
// 2 configuration or usage error, 3 stage failure. Errors are reported as one JSON object on
// stderr; stage summaries go to stdout.
//
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "splatforge/annotation/http_backend.hpp"
#include "splatforge/core/log.hpp"
#include "splatforge/pipeline/stages.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int report_error(const std::string& kind, const std::string& command, const std::string& message, int code) {
    const nlohmann::json j = {{"error", {{"kind", kind}, {"command", command}, {"message", message}, {"exit_code", code}}}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace splatforge;
    CLI::App app{"Splat scene to robot demonstration pipeline"};
    app.set_help_all_flag("--help-all", "Show help for every command");
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string log_level, output_dir;
    bool mock = false;
    bool print_config = false;
    app.add_option("--config", config_path, "Pipeline config file (JSON)");
    app.add_option("--seed", seed, "Base seed (overrides base_seed)");
    app.add_option("--workers", workers, "Worker threads (overrides generation.workers)")->check(CLI::PositiveNumber);
    app.add_option("--output", output_dir, "Output directory (overrides paths.output)");
    app.add_option("--log-level", log_level, "debug, info, warn or error (overrides log_level)");
    app.add_flag("--mock", mock, "Use the mock annotation backend (offline)");
    app.add_flag("--print-config", print_config, "Print the fully defaulted config and exit");

    auto* train = app.add_subcommand("train-features", "Train per-splat semantic features");
    auto* align = app.add_subcommand("align", "Register the scene to the robot model");
    auto* align_cam = app.add_subcommand("align-camera", "Optimize a camera pose against an image");
    std::string image_path, init_pose_path;
    align_cam->add_option("--image", image_path, "Real image (PNG or PFM)")->required();
    align_cam->add_option("--init-pose", init_pose_path, "Initial camera (JSON)")->required();
    auto* annotate = app.add_subcommand("annotate", "Annotate a mesh and write its asset bundle");
    std::string asset_name;
    annotate->add_option("--asset", asset_name, "Asset name from paths.assets")->required();
    auto* generate = app.add_subcommand("generate", "Generate the demonstration dataset");
    std::optional<std::size_t> episodes;
    generate->add_option("--episodes", episodes, "Episode count (overrides generation.episodes)");
    auto* render = app.add_subcommand("render", "Render one frame of a scene");
    std::string camera_pose_path, out_path, scene_path;
    render->add_option("--camera-pose", camera_pose_path, "Camera (JSON)")->required();
    render->add_option("--out", out_path, "Output PNG")->required();
    render->add_option("--scene", scene_path, "Scene PLY (default: the aligned scene)");
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", "", e.what(), kExitConfig);
    }

    const std::string command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    PipelineConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_pipeline_config(config_path);
        if (seed) cfg.base_seed = *seed;
        if (workers) cfg.generation.workers = *workers;
        if (episodes) cfg.generation.episodes = *episodes;
        if (!log_level.empty()) cfg.log_level = log_level;
        if (!output_dir.empty()) cfg.paths.output = std::filesystem::absolute(output_dir).string();
        cfg.validate();
    } catch (const Error& e) {
        return report_error("config", command, e.what(), kExitConfig);
    }
    log::set_level(log::parse_level(cfg.log_level));

    if (print_config) {
        std::cout << nlohmann::json(cfg).dump(2) << "\n";
        return 0;
    }
    if (command.empty()) {
        std::cerr << app.help();
        return report_error("usage", "", "no command given", kExitConfig);
    }

    const int threads = cfg.generation.workers;
    try {
        log::info("stage start", {{"command", command}, {"base_seed", cfg.base_seed}});
        nlohmann::json summary;
        if (command == "train-features") {
            summary = stage_train_features(cfg, threads);
        } else if (command == "align") {
            summary = stage_align(cfg);
        } else if (command == "align-camera") {
            summary = stage_align_camera(cfg, image_path, init_pose_path, threads);
        } else if (command == "annotate") {
            std::shared_ptr<ChatBackend> backend;
            if (mock) {
                if (cfg.paths.mock_fixtures.empty()) throw ConfigError("paths.mock_fixtures: required with --mock");
                backend = std::make_shared<MockBackend>(MockBackend::from_file(cfg.resolve(cfg.paths.mock_fixtures)));
            } else {
                backend = std::make_shared<HttpBackend>(cfg.annotation.client);
            }
            summary = stage_annotate(cfg, asset_name, backend);
        } else if (command == "generate") {
            summary = stage_generate(cfg);
        } else if (command == "render") {
            summary = stage_render(cfg, camera_pose_path, out_path, scene_path, threads);
        }
        log::info("stage done", {{"command", command}});
        std::cout << summary.dump(2) << "\n";
        return 0;
    } catch (const ConfigError& e) {
        return report_error("config", command, e.what(), kExitConfig);
    } catch (const std::exception& e) {
        return report_error("stage", command, e.what(), kExitStage);
    }
}
