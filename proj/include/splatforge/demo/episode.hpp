// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Recorded demonstrations and their on-disk layout:
//   ep_{id:06}/episode.json          header line, then one JSON line per frame
//   ep_{id:06}/cam{k}_{frame:05}.png renders
// Every recorded float is rounded to 9 significant digits before it is used, so writing and
// reading back reproduces the in-memory episode exactly.
//
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/augment/augmentation.hpp"
#include "splatforge/core/camera.hpp"
#include "splatforge/core/image.hpp"
#include "splatforge/core/image_io.hpp"
#include "splatforge/demo/task.hpp"
#include "splatforge/kinematics/robot_model.hpp"

namespace splatforge {

inline constexpr int kEpisodeSchemaVersion = 1;

/// Joint values are stored as integer multiples of 1 / kJointTicks, so recorded deltas add up
/// exactly and print exactly with 9 significant digits (|q| < 10).
inline constexpr double kJointTicks = 1e8;

/// Nearest double to x printed with 9 significant digits.
inline double round9(double x) {
    if (!std::isfinite(x)) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return std::strtod(buf, nullptr);
}

inline RigidTransform round9(const RigidTransform& t) {
    RigidTransform out;
    for (int i = 0; i < 9; ++i) out.rotation.data()[i] = round9(t.rotation.data()[i]);
    for (int i = 0; i < 3; ++i) out.translation[i] = round9(t.translation[i]);
    return out;
}

/// Rounds every floating-point number in a JSON tree to 9 significant digits.
inline void round_json_floats(nlohmann::json& j) {
    if (j.is_number_float()) j = round9(j.get<double>());
    else if (j.is_structured())
        for (auto& v : j) round_json_floats(v);
}

/// Episode directory and render file names.
inline std::string episode_dirname(std::uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ep_%06llu", static_cast<unsigned long long>(id));
    return buf;
}

inline std::string render_filename(std::size_t camera, std::size_t frame) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "cam%zu_%05zu.png", camera, frame);
    return buf;
}

struct ObjectState {
    RigidTransform pose;
    double joint = 0.0;

    bool operator==(const ObjectState& o) const {
        return pose.rotation == o.pose.rotation && pose.translation == o.pose.translation && joint == o.joint;
    }
};

struct Frame {
    double timestamp = 0.0;  // s
    JointConfig joint_config;
    double gripper = 0.0;  // 0 open, 1 closed
    JointConfig action_dq;  // joint_config − previous joint_config
    double action_gripper = 0.0;  // commanded gripper value
    std::map<std::string, ObjectState> objects;  // by role
    std::string attached;  // role held by the gripper, empty when none
    double coverage = 0.0;  // wiped surface fraction
    std::vector<std::string> renders;  // file name per camera

    bool operator==(const Frame&) const = default;
};

/// Initial placement of one role.
struct PlacedObject {
    std::string role;
    std::string asset;
    ObjectPlacement placement;
    double joint = 0.0;

    bool operator==(const PlacedObject& o) const {
        return role == o.role && asset == o.asset && placement.pose.rotation == o.placement.pose.rotation &&
               placement.pose.translation == o.placement.pose.translation && placement.uniform_scale == o.placement.uniform_scale &&
               placement.radius == o.placement.radius && placement.yaw == o.placement.yaw && joint == o.joint;
    }
};

struct Episode {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    TaskSpec task;
    double control_dt = 0.05;  // s
    std::vector<PlacedObject> placements;
    nlohmann::json augmentation;  // full AugmentationConfig snapshot
    LightingDraw lighting;
    std::vector<CameraModel> cameras;  // perturbed cameras used for every frame
    std::vector<Frame> frames;
    bool success = false;
    std::string failure_phase;  // empty unless the script aborted
    double generation_time_s = 0.0;  // wall clock; reported in meta.json, not in episode.json

    std::vector<std::vector<Image8>> images;  // [frame][camera]; filled by generation, not by read_episode

    const Frame& final_frame() const {
        if (frames.empty()) throw ValidationError("frames", "episode has no frames");
        return frames.back();
    }
};

/// A frame file listed in episode.json is missing.
class EpisodeFileError : public IoError {
  public:
    EpisodeFileError(std::size_t frame, const std::string& file)
        : IoError("frame " + std::to_string(frame) + ": missing render " + file), frame_(frame), file_(file) {}
    std::size_t frame() const noexcept { return frame_; }
    const std::string& file() const noexcept { return file_; }

  private:
    std::size_t frame_;
    std::string file_;
};

/// episode.json was written by a newer (or unknown) schema version.
class SchemaVersionError : public ParseError {
  public:
    SchemaVersionError(const std::string& source, int found)
        : ParseError(source, "schema_version",
                     "unsupported schema version " + std::to_string(found) + " (this build reads " +
                         std::to_string(kEpisodeSchemaVersion) + ")"),
          found_(found) {}
    int found() const noexcept { return found_; }

  private:
    int found_;
};

// ---- JSON ------------------------------------------------------------------------------------

namespace detail {

inline nlohmann::json vec_json(const VecX& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline VecX json_vec(const nlohmann::json& j) {
    VecX v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

}  // namespace detail

inline nlohmann::json episode_header_json(const Episode& e) {
    nlohmann::json placements = nlohmann::json::array();
    for (const auto& p : e.placements)
        placements.push_back({{"role", p.role}, {"asset", p.asset}, {"placement", to_json_value(p.placement)}, {"joint", p.joint}});
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& c : e.cameras) cams.push_back(c);
    nlohmann::json h{{"schema_version", kEpisodeSchemaVersion},
                     {"id", e.id},
                     {"seed", e.seed},
                     {"task", to_json_value(e.task)},
                     {"control_dt", e.control_dt},
                     {"placements", placements},
                     {"augmentation", e.augmentation},
                     {"lighting", {{"scale", e.lighting.scale}, {"offset", e.lighting.offset}}},
                     {"cameras", cams},
                     {"frame_count", e.frames.size()},
                     {"success", e.success},
                     {"failure_phase", e.failure_phase}};
    round_json_floats(h);
    return h;
}

inline nlohmann::json frame_json(const Frame& f) {
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& [role, s] : f.objects) objects[role] = {{"pose", to_json_matrix(s.pose)}, {"joint", s.joint}};
    nlohmann::json j{{"t", f.timestamp},
                     {"q", detail::vec_json(f.joint_config)},
                     {"gripper", f.gripper},
                     {"action", {{"dq", detail::vec_json(f.action_dq)}, {"gripper", f.action_gripper}}},
                     {"objects", objects},
                     {"attached", f.attached},
                     {"coverage", f.coverage},
                     {"renders", f.renders}};
    round_json_floats(j);
    return j;
}

/// The complete episode.json text.
inline std::string episode_json_lines(const Episode& e) {
    std::string out = episode_header_json(e).dump() + "\n";
    for (const auto& f : e.frames) out += frame_json(f).dump() + "\n";
    return out;
}

/// Writes episode.json and any in-memory renders into `dir` (created if needed).
inline void write_episode(const Episode& e, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < e.images.size() && i < e.frames.size(); ++i)
        for (std::size_t k = 0; k < e.images[i].size() && k < e.frames[i].renders.size(); ++k)
            write_png(dir / e.frames[i].renders[k], e.images[i][k]);
    const auto path = dir / "episode.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << episode_json_lines(e);
    if (!f) throw IoError("write failed: " + path.string());
}

/// Reads episode.json from `dir` and checks that every referenced render exists. Images are
/// not loaded; use load_render.
inline Episode read_episode(const std::filesystem::path& dir) {
    const auto path = dir / "episode.json";
    const std::string src = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + src);
    std::string line;
    std::vector<nlohmann::json> lines;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            lines.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& ex) {
            throw ParseError(src, "line " + std::to_string(lineno), ex.what());
        }
    }
    if (lines.empty()) throw ParseError(src, "header", "empty episode file");
    Episode e;
    try {
        const auto& h = lines.front();
        if (!h.contains("schema_version") || !h.at("schema_version").is_number_integer())
            throw ParseError(src, "schema_version", "missing schema version");
        const int version = h.at("schema_version").get<int>();
        if (version != kEpisodeSchemaVersion) throw SchemaVersionError(src, version);
        static const std::set<std::string> known{"schema_version", "id", "seed", "task", "control_dt", "placements", "augmentation",
                                                 "lighting", "cameras", "frame_count", "success", "failure_phase"};
        for (auto it = h.begin(); it != h.end(); ++it)
            if (!known.count(it.key())) throw ParseError(src, it.key(), "unknown header field for schema version 1");
        e.id = h.at("id").get<std::uint64_t>();
        e.seed = h.at("seed").get<std::uint64_t>();
        e.task = task_spec_from_json(h.at("task"), "task");
        e.control_dt = h.at("control_dt").get<double>();
        for (const auto& p : h.at("placements")) {
            PlacedObject po;
            po.role = p.at("role").get<std::string>();
            po.asset = p.at("asset").get<std::string>();
            const auto& pl = p.at("placement");
            po.placement.pose = from_json_matrix(pl.at("pose"));
            po.placement.uniform_scale = pl.at("uniform_scale").get<double>();
            po.placement.radius = pl.at("radius").get<double>();
            po.placement.yaw = pl.at("yaw").get<double>();
            po.joint = p.at("joint").get<double>();
            e.placements.push_back(po);
        }
        e.augmentation = h.at("augmentation");
        e.lighting.scale = h.at("lighting").at("scale").get<double>();
        e.lighting.offset = h.at("lighting").at("offset").get<double>();
        for (const auto& c : h.at("cameras")) e.cameras.push_back(c.get<CameraModel>());
        e.success = h.at("success").get<bool>();
        e.failure_phase = h.at("failure_phase").get<std::string>();
        const auto count = h.at("frame_count").get<std::size_t>();
        if (count != lines.size() - 1)
            throw ParseError(src, "frame_count", "header lists " + std::to_string(count) + " frames, file has " +
                                                     std::to_string(lines.size() - 1));
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto& j = lines[i];
            Frame f;
            f.timestamp = j.at("t").get<double>();
            f.joint_config = detail::json_vec(j.at("q"));
            f.gripper = j.at("gripper").get<double>();
            f.action_dq = detail::json_vec(j.at("action").at("dq"));
            f.action_gripper = j.at("action").at("gripper").get<double>();
            for (auto it = j.at("objects").begin(); it != j.at("objects").end(); ++it)
                f.objects[it.key()] = {from_json_matrix(it->at("pose")), it->at("joint").get<double>()};
            f.attached = j.at("attached").get<std::string>();
            f.coverage = j.at("coverage").get<double>();
            f.renders = j.at("renders").get<std::vector<std::string>>();
            if (!e.frames.empty() && !(f.timestamp > e.frames.back().timestamp))
                throw ParseError(src, "frame " + std::to_string(i - 1), "timestamps must increase");
            e.frames.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(src, "episode", ex.what());
    } catch (const ConfigError& ex) {
        throw ParseError(src, "task", ex.what());
    } catch (const ValidationError& ex) {
        throw ParseError(src, ex.field(), ex.what());
    }
    for (std::size_t i = 0; i < e.frames.size(); ++i)
        for (const auto& r : e.frames[i].renders)
            if (!std::filesystem::exists(dir / r)) throw EpisodeFileError(i, r);
    return e;
}

/// The stored render of `frame` from camera `camera`.
inline Image8 load_render(const std::filesystem::path& dir, const Episode& e, std::size_t frame, std::size_t camera) {
    if (frame >= e.frames.size() || camera >= e.frames[frame].renders.size())
        throw ValidationError("frame", "no render for frame " + std::to_string(frame) + " camera " + std::to_string(camera));
    const auto path = dir / e.frames[frame].renders[camera];
    if (!std::filesystem::exists(path)) throw EpisodeFileError(frame, e.frames[frame].renders[camera]);
    return read_png(path);
}

}  // namespace splatforge
