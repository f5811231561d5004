// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Scripted manipulation tasks: which assets are placed under which role, the ordered motion
// primitives that solve the task, and the success predicate evaluated on the final state.
//
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/json_fields.hpp"
#include "splatforge/demo/scene_state.hpp"

namespace splatforge {

enum class TaskKind { stack_cubes, pick_place, upright_bottle, move_bottle, drawer_close, box_close, wiping };

inline const std::vector<std::pair<TaskKind, const char*>>& task_kind_names() {
    static const std::vector<std::pair<TaskKind, const char*>> names{
        {TaskKind::stack_cubes, "stack_cubes"},   {TaskKind::pick_place, "pick_place"}, {TaskKind::upright_bottle, "upright_bottle"},
        {TaskKind::move_bottle, "move_bottle"},   {TaskKind::drawer_close, "drawer_close"},
        {TaskKind::box_close, "box_close"},       {TaskKind::wiping, "wiping"}};
    return names;
}

inline const char* to_string(TaskKind k) {
    for (const auto& [kind, name] : task_kind_names())
        if (kind == k) return name;
    return "?";
}

inline TaskKind parse_task_kind(const std::string& s) {
    for (const auto& [kind, name] : task_kind_names())
        if (s == name) return kind;
    throw ConfigError("task.name: unknown task '" + s + "'");
}

/// One placed object. Yaw comes from yaw_range when set, else from the augmentation config;
/// with face_robot the yaw is relative to the heading that points the object's +x at the robot.
struct RoleBinding {
    std::string role;
    std::string asset;
    bool face_robot = false;
    bool lying = false;           // rotated a quarter turn about x, so +z lies horizontal
    bool joint_open = false;      // articulated assets start at the upper limit instead of the lower
    std::optional<Range> yaw_range;

    bool operator==(const RoleBinding&) const = default;
};

enum class PrimitiveOp { approach, grasp, transfer, release, push_joint, wipe_path };

inline const char* to_string(PrimitiveOp op) {
    switch (op) {
        case PrimitiveOp::approach: return "approach";
        case PrimitiveOp::grasp: return "grasp";
        case PrimitiveOp::transfer: return "transfer";
        case PrimitiveOp::release: return "release";
        case PrimitiveOp::push_joint: return "push_joint";
        case PrimitiveOp::wipe_path: return "wipe_path";
    }
    return "?";
}

inline PrimitiveOp parse_primitive_op(const std::string& s) {
    for (const auto op : {PrimitiveOp::approach, PrimitiveOp::grasp, PrimitiveOp::transfer, PrimitiveOp::release,
                          PrimitiveOp::push_joint, PrimitiveOp::wipe_path})
        if (s == to_string(op)) return op;
    throw ConfigError("task.script.op: unknown primitive '" + s + "'");
}

/// One step of the phase script. `role` names the object acted on (for wipe_path, the surface).
/// Transfer puts the bottom center of the held object's bounding box at the anchor's origin
/// (x, y) plus `offset`; z starts from the anchor's top with on_top, else from the support
/// plane. An empty anchor means the held object's own position when grasped.
struct Primitive {
    PrimitiveOp op = PrimitiveOp::approach;
    std::string role;
    std::string anchor;
    bool on_top = false;
    Vec3 offset = Vec3::Zero();
    bool upright = false;  // transfer turns the object's +z to world up

    bool operator==(const Primitive&) const = default;
};

enum class PredicateType { region, joint_closure, upright, coverage };

inline const char* to_string(PredicateType t) {
    switch (t) {
        case PredicateType::region: return "region";
        case PredicateType::joint_closure: return "joint_closure";
        case PredicateType::upright: return "upright";
        case PredicateType::coverage: return "coverage";
    }
    return "?";
}

/// region: the role's bounding-box center lies in the world-axis box centered at the anchor's
/// origin plus offset. joint_closure: joint − lower ≤ threshold. upright: tilt of the role's +z
/// from world up ≤ threshold (rad). coverage: wiped fraction of the surface ≥ threshold.
struct SuccessPredicate {
    PredicateType type = PredicateType::region;
    std::string role;
    std::string anchor;
    Vec3 offset = Vec3::Zero();
    Vec3 half_extents = Vec3::Constant(0.05);
    double threshold = 0.0;

    bool operator==(const SuccessPredicate&) const = default;
};

struct TaskSpec {
    TaskKind kind = TaskKind::pick_place;
    std::vector<RoleBinding> objects;  // placement order
    std::vector<Primitive> script;
    SuccessPredicate success;

    bool operator==(const TaskSpec&) const = default;

    const RoleBinding& binding(const std::string& role) const {
        for (const auto& b : objects)
            if (b.role == role) return b;
        throw ConfigError("task." + std::string(to_string(kind)) + ": no object bound to role '" + role + "'");
    }

    /// Checks role references, primitive arguments and predicate parameters; with `assets`,
    /// also that every bound asset exists.
    void validate(const std::map<std::string, InteractiveAsset>* assets = nullptr) const {
        const std::string where = "task." + std::string(to_string(kind));
        if (objects.empty()) throw ConfigError(where + ": no objects bound");
        std::set<std::string> roles;
        for (const auto& b : objects) {
            if (b.role.empty()) throw ConfigError(where + ": empty role name");
            if (!roles.insert(b.role).second) throw ConfigError(where + ": role '" + b.role + "' bound twice");
            if (b.yaw_range && !((*b.yaw_range)[0] <= (*b.yaw_range)[1]))
                throw ConfigError(where + ".objects." + b.role + ".yaw_range: range must be ordered");
            if (assets) {
                const auto it = assets->find(b.asset);
                if (it == assets->end()) throw ConfigError(where + ": unknown asset '" + b.asset + "' for role '" + b.role + "'");
                if (b.joint_open && !it->second.articulation)
                    throw ConfigError(where + ": role '" + b.role + "' has joint_open but asset '" + b.asset + "' is rigid");
            }
        }
        auto need_role = [&](const std::string& r, const std::string& what) {
            if (!roles.count(r)) throw ConfigError(where + "." + what + ": unknown role '" + r + "'");
        };
        if (script.empty()) throw ConfigError(where + ".script: empty phase script");
        for (const auto& p : script) {
            if (p.op != PrimitiveOp::release) need_role(p.role, "script");
            if (p.op == PrimitiveOp::transfer && !p.anchor.empty()) need_role(p.anchor, "script.anchor");
            if (!p.offset.allFinite()) throw ConfigError(where + ".script: non-finite offset");
            if ((p.op == PrimitiveOp::push_joint) && assets && !assets->at(binding(p.role).asset).articulation)
                throw ConfigError(where + ".script: push_joint on rigid asset '" + binding(p.role).asset + "'");
        }
        const auto& s = success;
        if (s.type != PredicateType::coverage) need_role(s.role, "success");
        if (s.type == PredicateType::region) {
            if (!s.anchor.empty()) need_role(s.anchor, "success.anchor");
            if (!((s.half_extents.array() > 0).all())) throw ConfigError(where + ".success.half_extents: must be > 0");
        } else if (!(s.threshold >= 0) || !std::isfinite(s.threshold)) {
            throw ConfigError(where + ".success.threshold: must be finite and >= 0");
        }
        if (s.type == PredicateType::coverage && s.threshold > 1) throw ConfigError(where + ".success.threshold: coverage is at most 1");
        if (s.type == PredicateType::joint_closure && assets && !assets->at(binding(s.role).asset).articulation)
            throw ConfigError(where + ".success: joint_closure on rigid asset '" + binding(s.role).asset + "'");
    }
};

// ---- defaults --------------------------------------------------------------------------------

/// Built-in task definitions over the built-in asset names.
inline TaskSpec default_task(TaskKind kind) {
    using P = PrimitiveOp;
    TaskSpec t;
    t.kind = kind;
    const Range facing{-std::numbers::pi / 8, std::numbers::pi / 8};
    auto pick = [&](const std::string& role) {
        t.script.push_back({P::approach, role});
        t.script.push_back({P::grasp, role});
    };
    switch (kind) {
        case TaskKind::stack_cubes:
            t.objects = {{"red", "red_cube"}, {"blue", "blue_cube"}};
            pick("red");
            t.script.push_back({P::transfer, "red", "blue", true, Vec3(0, 0, 0.0005)});
            t.script.push_back({P::release});
            t.success = {PredicateType::region, "red", "blue", Vec3(0, 0, 0.053), Vec3::Constant(0.012)};
            break;
        case TaskKind::pick_place:
            t.objects = {{"object", "cube"}, {"container", "box"}};
            pick("object");
            t.script.push_back({P::transfer, "object", "container", false, Vec3(0, 0, 0.008)});
            t.script.push_back({P::release});
            t.success = {PredicateType::region, "object", "container", Vec3(0, 0, 0.03), Vec3(0.05, 0.05, 0.035)};
            break;
        case TaskKind::upright_bottle:
            t.objects = {{"bottle", "bottle", false, true}};
            pick("bottle");
            t.script.push_back({P::transfer, "bottle", "", false, Vec3(0, 0, 0.0005), true});
            t.script.push_back({P::release});
            t.success = {PredicateType::upright, "bottle", "", Vec3::Zero(), Vec3::Constant(0.05), 15.0 * std::numbers::pi / 180};
            break;
        case TaskKind::move_bottle:
            t.objects = {{"bottle", "bottle"}, {"plate", "plate"}};
            pick("bottle");
            t.script.push_back({P::transfer, "bottle", "plate", true, Vec3(0, 0, 0.0005)});
            t.script.push_back({P::release});
            t.success = {PredicateType::region, "bottle", "plate", Vec3(0, 0, 0.1), Vec3::Constant(0.03)};
            break;
        case TaskKind::drawer_close:
            t.objects = {{"cabinet", "cabinet", true, false, true, facing}};
            t.script.push_back({P::push_joint, "cabinet"});
            t.success = {PredicateType::joint_closure, "cabinet", "", Vec3::Zero(), Vec3::Constant(0.05), 0.005};
            break;
        case TaskKind::box_close:
            t.objects = {{"box", "lidded_box", true, false, true, facing}};
            t.script.push_back({P::push_joint, "box"});
            t.success = {PredicateType::joint_closure, "box", "", Vec3::Zero(), Vec3::Constant(0.05), 0.05};
            break;
        case TaskKind::wiping:
            t.objects = {{"sponge", "sponge"}, {"surface", "mat"}};
            pick("sponge");
            t.script.push_back({P::wipe_path, "surface"});
            t.script.push_back({P::release});
            t.success = {PredicateType::coverage, "", "", Vec3::Zero(), Vec3::Constant(0.05), 0.8};
            break;
    }
    return t;
}

// ---- predicates ------------------------------------------------------------------------------

/// Center of the goal region in world coordinates.
inline Vec3 region_center(const SceneState& s, const std::string& anchor, const Vec3& offset) {
    return anchor.empty() ? offset : Vec3(s.object(anchor).pose.translation + offset);
}

/// Evaluates the predicate on a scene state and the wiped coverage fraction.
inline bool evaluate_predicate(const SuccessPredicate& p, const SceneState& s, double coverage) {
    switch (p.type) {
        case PredicateType::region: {
            const Vec3 d = s.object(p.role).center() - region_center(s, p.anchor, p.offset);
            return (d.cwiseAbs().array() <= p.half_extents.array()).all();
        }
        case PredicateType::joint_closure: {
            const auto& o = s.object(p.role);
            if (!o.asset.articulation) throw ValidationError("success.role", "'" + p.role + "' is not articulated");
            return o.joint - o.asset.articulation->limit_lower <= p.threshold;
        }
        case PredicateType::upright: {
            const double c = std::clamp(s.object(p.role).pose.rotation.col(2).z(), -1.0, 1.0);
            return std::acos(c) <= p.threshold;
        }
        case PredicateType::coverage: return coverage >= p.threshold;
    }
    return false;
}

// ---- JSON ------------------------------------------------------------------------------------

inline nlohmann::json to_json_value(const TaskSpec& t) {
    auto v3 = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& b : t.objects) {
        nlohmann::json o{{"role", b.role}, {"asset", b.asset}, {"face_robot", b.face_robot}, {"lying", b.lying}, {"joint_open", b.joint_open}};
        if (b.yaw_range) o["yaw_range"] = *b.yaw_range;
        objects.push_back(o);
    }
    nlohmann::json script = nlohmann::json::array();
    for (const auto& p : t.script) {
        nlohmann::json o{{"op", to_string(p.op)}};
        if (p.op != PrimitiveOp::release) o["role"] = p.role;
        if (p.op == PrimitiveOp::transfer) {
            o["anchor"] = p.anchor;
            o["on_top"] = p.on_top;
            o["offset"] = v3(p.offset);
            o["upright"] = p.upright;
        }
        script.push_back(o);
    }
    const auto& s = t.success;
    nlohmann::json succ{{"type", to_string(s.type)}};
    if (s.type != PredicateType::coverage) succ["role"] = s.role;
    if (s.type == PredicateType::region) {
        succ["anchor"] = s.anchor;
        succ["offset"] = v3(s.offset);
        succ["half_extents"] = v3(s.half_extents);
    } else {
        succ["threshold"] = s.threshold;
    }
    return {{"name", to_string(t.kind)}, {"objects", objects}, {"script", script}, {"success", succ}};
}

/// Strict reader. Only "name" is required; objects, script and success default to the
/// built-in definition of that task when absent.
inline TaskSpec task_spec_from_json(const nlohmann::json& j, const std::string& path = "task") {
    JsonFields f(j, path);
    std::string name;
    f.get("name", name);
    if (name.empty()) throw ConfigError(path + ".name: required");
    TaskSpec t = default_task(parse_task_kind(name));
    if (const auto* objs = f.child("objects")) {
        if (!objs->is_array()) throw ConfigError(path + ".objects: expected an array");
        t.objects.clear();
        for (std::size_t i = 0; i < objs->size(); ++i) {
            const std::string p = path + ".objects[" + std::to_string(i) + "]";
            JsonFields g((*objs)[i], p);
            RoleBinding b;
            g.get("role", b.role).get("asset", b.asset).get("face_robot", b.face_robot).get("lying", b.lying);
            g.get("joint_open", b.joint_open);
            if ((*objs)[i].contains("yaw_range")) {
                Range r{};
                g.get("yaw_range", r);
                b.yaw_range = r;
            } else {
                g.child("yaw_range");
            }
            g.finish();
            t.objects.push_back(b);
        }
    }
    if (const auto* sc = f.child("script")) {
        if (!sc->is_array()) throw ConfigError(path + ".script: expected an array");
        t.script.clear();
        for (std::size_t i = 0; i < sc->size(); ++i) {
            JsonFields g((*sc)[i], path + ".script[" + std::to_string(i) + "]");
            std::string op;
            Primitive p;
            g.get("op", op).get("role", p.role).get("anchor", p.anchor).get("on_top", p.on_top);
            g.get("offset", p.offset).get("upright", p.upright).finish();
            p.op = parse_primitive_op(op);
            t.script.push_back(p);
        }
    }
    if (const auto* sj = f.child("success")) {
        JsonFields g(*sj, path + ".success");
        std::string type;
        SuccessPredicate s;
        g.get("type", type).get("role", s.role).get("anchor", s.anchor).get("offset", s.offset);
        g.get("half_extents", s.half_extents).get("threshold", s.threshold).finish();
        if (type == "region") s.type = PredicateType::region;
        else if (type == "joint_closure") s.type = PredicateType::joint_closure;
        else if (type == "upright") s.type = PredicateType::upright;
        else if (type == "coverage") s.type = PredicateType::coverage;
        else throw ConfigError(path + ".success.type: unknown predicate '" + type + "'");
        t.success = s;
    }
    f.finish();
    t.validate();
    return t;
}

}  // namespace splatforge
