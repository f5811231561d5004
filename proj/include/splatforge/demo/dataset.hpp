// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Batch generation of episodes into an on-disk dataset, the success/timing report and a
// re-render check of stored images.
//
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/parallel.hpp"
#include "splatforge/demo/run_task.hpp"

namespace splatforge {

inline constexpr int kDatasetSchemaVersion = 1;

/// A worker hit an unexpected error; the whole run is aborted.
class GenerationError : public Error {
  public:
    GenerationError(std::uint64_t episode, const std::string& what)
        : Error("episode " + std::to_string(episode) + ": " + what), episode_(episode) {}
    std::uint64_t episode() const { return episode_; }

  private:
    std::uint64_t episode_;
};

struct EpisodeSummary {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    std::string task;
    bool success = false;
    std::string failure_phase;
    std::size_t frames = 0;
    double generation_time_s = 0.0;
};

struct TaskReport {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double mean_generation_time_s = 0.0;
};

struct GenerationReport {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double mean_generation_time_s = 0.0;
    std::map<std::string, TaskReport> per_task;
    std::vector<EpisodeSummary> summaries;  // by episode id
};

inline GenerationReport summarize(std::vector<EpisodeSummary> summaries) {
    GenerationReport r;
    double total_time = 0.0;
    std::map<std::string, double> task_time;
    for (const auto& s : summaries) {
        auto& t = r.per_task[s.task];
        ++t.episodes;
        t.successes += s.success ? 1 : 0;
        task_time[s.task] += s.generation_time_s;
        ++r.episodes;
        r.successes += s.success ? 1 : 0;
        total_time += s.generation_time_s;
    }
    for (auto& [name, t] : r.per_task) {
        t.success_rate = static_cast<double>(t.successes) / static_cast<double>(t.episodes);
        t.mean_generation_time_s = task_time[name] / static_cast<double>(t.episodes);
    }
    if (r.episodes > 0) {
        r.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.episodes);
        r.mean_generation_time_s = total_time / static_cast<double>(r.episodes);
    }
    r.summaries = std::move(summaries);
    return r;
}

inline nlohmann::json to_json_value(const GenerationReport& r) {
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [name, t] : r.per_task)
        tasks[name] = {{"episodes", t.episodes}, {"successes", t.successes}, {"success_rate", t.success_rate},
                       {"mean_generation_time_s", t.mean_generation_time_s}};
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& s : r.summaries)
        eps.push_back({{"id", s.id}, {"seed", s.seed}, {"task", s.task}, {"success", s.success},
                       {"failure_phase", s.failure_phase}, {"frames", s.frames}, {"generation_time_s", s.generation_time_s}});
    nlohmann::json j = {{"episodes", r.episodes}, {"successes", r.successes}, {"success_rate", r.success_rate},
                        {"mean_generation_time_s", r.mean_generation_time_s}, {"per_task", tasks}, {"episode_summaries", eps}};
    round_json_floats(j);
    return j;
}

namespace detail {

inline void require_writable_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("output directory " + dir.string() + " is not writable: " + ec.message());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f || !(f << "ok")) throw IoError("output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace detail

/// Generates episodes 0..n-1 into `dir` (the dataset root): episode i runs tasks[i % size] with
/// seed aug.base_seed + i. Episodes whose script fails are kept and flagged. Any other error in
/// a worker aborts the run with a GenerationError naming the episode.
inline GenerationReport generate_dataset(const DemoWorld& world, const std::vector<TaskSpec>& tasks, const AugmentationConfig& aug,
                                         const DemoConfig& cfg, std::size_t n, const std::filesystem::path& dir, int workers) {
    cfg.validate();
    aug.validate();
    world.validate();
    if (tasks.empty()) throw ConfigError("tasks: at least one task is required");
    for (const auto& t : tasks) t.validate(&world.assets);
    if (workers <= 0) throw ConfigError("generation.workers: must be > 0");
    detail::require_writable_dir(dir);

    std::vector<EpisodeSummary> summaries(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const std::uint64_t id = i;
        try {
            Episode e = run_task(world, tasks[i % tasks.size()], aug, cfg, id, aug.base_seed + id);
            write_episode(e, dir / episode_dirname(id));
            summaries[i] = {id, e.seed, to_string(e.task.kind), e.success, e.failure_phase, e.frames.size(), e.generation_time_s};
        } catch (const GenerationError&) {
            throw;
        } catch (const std::exception& ex) {
            throw GenerationError(id, ex.what());
        }
    });
    GenerationReport report = summarize(std::move(summaries));

    nlohmann::json task_json = nlohmann::json::array();
    for (const auto& t : tasks) task_json.push_back(to_json_value(recorded_task(t)));
    nlohmann::json aug_json = aug;
    nlohmann::json cfg_json = cfg;
    round_json_floats(aug_json);
    round_json_floats(cfg_json);
    const nlohmann::json meta = {{"schema_version", kDatasetSchemaVersion},
                                 {"config", {{"generation", cfg_json}, {"augmentation", aug_json}, {"tasks", task_json}}},
                                 {"episode_count", n},
                                 {"report", to_json_value(report)}};
    std::ofstream f(dir / "meta.json");
    if (!f) throw IoError("cannot write " + (dir / "meta.json").string());
    f << meta.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + (dir / "meta.json").string());
    return report;
}

/// Episode directories of a dataset, sorted by name.
inline std::vector<std::filesystem::path> list_episode_dirs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
        if (entry.is_directory() && entry.path().filename().string().rfind("ep_", 0) == 0) out.push_back(entry.path());
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

struct RenderMismatch {
    std::uint64_t episode = 0;
    std::size_t frame = 0;
    std::size_t camera = 0;
};

struct RenderCheck {
    std::size_t episodes = 0;
    std::size_t images = 0;
    std::vector<RenderMismatch> mismatches;
};

/// Re-renders every stored frame of every episode from its recorded state and compares with
/// the PNG on disk.
inline RenderCheck verify_dataset_renders(const DemoWorld& world, const std::filesystem::path& dir, int workers = 1) {
    const auto dirs = list_episode_dirs(dir);
    std::vector<RenderCheck> parts(dirs.size());
    parallel_for(dirs.size(), workers, [&](std::size_t i) {
        const Episode e = read_episode(dirs[i]);
        const auto images = render_episode(world, e);
        RenderCheck& c = parts[i];
        for (std::size_t f = 0; f < images.size(); ++f)
            for (std::size_t k = 0; k < images[f].size(); ++k) {
                ++c.images;
                if (!(images[f][k] == load_render(dirs[i], e, f, k))) c.mismatches.push_back({e.id, f, k});
            }
    });
    RenderCheck out;
    out.episodes = dirs.size();
    for (auto& c : parts) {
        out.images += c.images;
        out.mismatches.insert(out.mismatches.end(), c.mismatches.begin(), c.mismatches.end());
    }
    return out;
}

}  // namespace splatforge
