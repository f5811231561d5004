// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Executes a task's phase script with kinematic grasping and records one frame per control
// step. The tool moves along straight Cartesian segments cut into short IK sub-targets (each
// seeded by the previous solution) and interpolated in joint space under joint and tool speed
// limits. Articulated parts follow the tool while it pushes along their motion.
//
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splatforge/demo/world.hpp"
#include "splatforge/kinematics/ik.hpp"

namespace splatforge {

/// The phase script could not continue; `phase` names the primitive (or "placement").
class TaskFailure : public Error {
  public:
    TaskFailure(std::string phase, const std::string& what) : Error(phase + ": " + what), phase_(std::move(phase)) {}
    const std::string& phase() const noexcept { return phase_; }

  private:
    std::string phase_;
};

namespace detail {

inline Mat3 rot_z(double a) { return so3_exp(Vec3(0, 0, a)); }

/// Top-down tool orientation (tool +z pointing at the table) keeping the current heading.
inline Mat3 top_down(const Mat3& current) {
    Vec3 x = current.col(0);
    x.z() = 0;
    if (x.norm() < 1e-6) {
        x = current.col(1);
        x.z() = 0;
    }
    if (x.norm() < 1e-6) x = Vec3::UnitX();
    x.normalize();
    Mat3 R;
    R.col(2) = -Vec3::UnitZ();
    R.col(0) = x;
    R.col(1) = R.col(2).cross(x);
    return R;
}

/// Shortest rotation taking unit vector a to unit vector b.
inline Mat3 rotation_between(const Vec3& a, const Vec3& b) {
    const Vec3 c = a.cross(b);
    const double s = c.norm(), d = a.dot(b);
    if (s < 1e-12) {
        if (d > 0) return Mat3::Identity();
        Vec3 perp = a.unitOrthogonal();
        return so3_exp(std::numbers::pi * perp);
    }
    return so3_exp(c / s * std::atan2(s, d));
}

inline Bounds bounds_at(const SceneObject& o, const RigidTransform& pose) {
    SceneObject c = o;
    c.pose = pose;
    return c.world_bounds();
}

}  // namespace detail

/// Samples placements for every bound role in order, resampling a role until it no longer
/// overlaps earlier ones. Stream: (seed, "placement").
inline std::vector<PlacedObject> place_objects(const DemoWorld& world, const TaskSpec& task, const ObjectAugmentConfig& cfg,
                                               int attempts, std::uint64_t seed) {
    Philox rng = Philox::stream(seed, "placement");
    SceneState state;
    std::vector<PlacedObject> out;
    for (const auto& b : task.objects) {
        const InteractiveAsset& asset = world.assets.at(b.asset);
        bool placed = false;
        for (int a = 0; a < attempts && !placed; ++a) {
            ObjectPlacement p = sample_object_placement(cfg, rng);
            double yaw = b.yaw_range ? rng.uniform((*b.yaw_range)[0], (*b.yaw_range)[1]) : p.yaw;
            if (b.face_robot) yaw += std::atan2(-p.pose.translation.y(), -p.pose.translation.x());
            p.yaw = round9(yaw);
            p.uniform_scale = round9(p.uniform_scale);
            p.radius = round9(p.radius);
            p.pose.rotation = detail::rot_z(p.yaw) * (b.lying ? so3_exp(Vec3(std::numbers::pi / 2, 0, 0)) : Mat3::Identity());
            SceneObject probe;
            probe.asset = scale_asset(asset, p.uniform_scale);
            const double joint =
                probe.asset.articulation ? round9(b.joint_open ? probe.asset.articulation->limit_upper : probe.asset.articulation->limit_lower)
                                         : 0.0;
            probe.joint = joint;
            const double lo = detail::bounds_at(probe, p.pose).first.z();
            p.pose.translation.z() += cfg.support_height - lo;
            p.pose = round9(p.pose);
            try {
                attach_object(state, b.role, asset, p, joint);
                out.push_back({b.role, b.asset, p, joint});
                placed = true;
            } catch (const PlacementRejected&) {
            }
        }
        if (!placed)
            throw TaskFailure("placement", "no free placement for '" + b.role + "' after " + std::to_string(attempts) + " attempts");
    }
    return out;
}

/// Success on the recorded data alone: no aborted phase and the predicate holds on the final frame.
inline bool evaluate_episode_success(const DemoWorld& world, const Episode& e) {
    if (!e.failure_phase.empty() || e.frames.empty()) return false;
    const SceneState s = frame_scene_state(initial_scene_state(world, e.placements), e.frames.back());
    return evaluate_predicate(e.task.success, s, e.frames.back().coverage);
}

namespace detail {

class TaskRunner {
  public:
    TaskRunner(const DemoWorld& world, const DemoConfig& cfg, const AugmentationConfig& aug, Episode& ep)
        : world_(world), cfg_(cfg), aug_(aug), ep_(ep), state_(initial_scene_state(world, ep.placements)) {
        ticks_.resize(static_cast<std::size_t>(world.robot.dof()));
        for (int k = 0; k < world.robot.dof(); ++k) ticks_[k] = std::llround(world.home[k] * kJointTicks);
        q_ik_ = joints();
        record(ticks_, 0.0);
    }

    void run() {
        for (const auto& p : ep_.task.script) {
            switch (p.op) {
                case PrimitiveOp::approach: approach(p); break;
                case PrimitiveOp::grasp: grasp(p); break;
                case PrimitiveOp::transfer: transfer(p); break;
                case PrimitiveOp::release: release(); break;
                case PrimitiveOp::push_joint: push_joint(p); break;
                case PrimitiveOp::wipe_path: wipe_path(p); break;
            }
        }
    }

  private:
    struct PushState {
        std::string role;
        double j0;
        Vec3 contact0;  // world contact point at j0
        Vec3 closing;   // prismatic: world closing direction
        Vec3 hinge;     // revolute: world point on the axis
        Vec3 axis;      // revolute: world axis
    };
    struct WipeState {
        std::string surface;
        std::vector<Vec3> cells;  // cell centers on the top face, surface frame
        std::vector<bool> covered;
        std::size_t count = 0;
    };

    JointConfig joints() const {
        JointConfig q(static_cast<Eigen::Index>(ticks_.size()));
        for (std::size_t k = 0; k < ticks_.size(); ++k) q[static_cast<Eigen::Index>(k)] = static_cast<double>(ticks_[k]) / kJointTicks;
        return q;
    }

    RigidTransform tool() const { return link_pose(world_.robot, joints(), world_.tool_link); }

    void record(const std::vector<std::int64_t>& ticks, double gripper) {
        const std::size_t i = ep_.frames.size();
        if (i > static_cast<std::size_t>(cfg_.max_steps))
            throw TaskFailure(phase_, "step cap of " + std::to_string(cfg_.max_steps) + " reached");
        Frame f;
        f.timestamp = round9(static_cast<double>(i) * ep_.control_dt);
        f.joint_config.resize(static_cast<Eigen::Index>(ticks.size()));
        f.action_dq.resize(static_cast<Eigen::Index>(ticks.size()));
        for (std::size_t k = 0; k < ticks.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            f.joint_config[e] = static_cast<double>(ticks[k]) / kJointTicks;
            f.action_dq[e] = i == 0 ? 0.0 : static_cast<double>(ticks[k] - ticks_[k]) / kJointTicks;
        }
        ticks_ = ticks;
        f.gripper = gripper;
        f.action_gripper = gripper;
        gripper_ = gripper;
        const RigidTransform T = tool();
        if (!held_.empty()) state_.object(held_).pose = round9(compose(T, grasp_offset_));
        if (push_) update_push(T.translation);
        if (wipe_) update_wipe();
        for (const auto& o : state_.objects) f.objects[o.name] = {o.pose, o.joint};
        f.attached = held_;
        f.coverage = wipe_ ? round9(static_cast<double>(wipe_->count) / static_cast<double>(wipe_->cells.size())) : coverage_;
        coverage_ = f.coverage;
        if (cfg_.render)
            for (std::size_t k = 0; k < world_.cameras.size(); ++k) f.renders.push_back(render_filename(k, i));
        ep_.frames.push_back(std::move(f));
    }

    std::vector<std::int64_t> quantize(const JointConfig& q) const {
        const JointConfig c = world_.robot.clamp(q);
        std::vector<std::int64_t> t(static_cast<std::size_t>(c.size()));
        for (Eigen::Index k = 0; k < c.size(); ++k) t[static_cast<std::size_t>(k)] = std::llround(c[k] * kJointTicks);
        return t;
    }

    /// Straight tool segment to `target`, cut into IK sub-targets.
    void move_tool(const RigidTransform& target) {
        const RigidTransform start = link_pose(world_.robot, q_ik_, world_.tool_link);
        const Vec3 dp = target.translation - start.translation;
        const Vec3 dr = so3_log(target.rotation * start.rotation.transpose());
        const int n = std::max({1, static_cast<int>(std::ceil(dp.norm() / cfg_.cartesian_step)), static_cast<int>(std::ceil(dr.norm() / 0.2))});
        // No restarts: a jump to another IK branch would break the straight tool path, so a
        // stalled sub-target fails the episode instead.
        IkOptions ik_opts;
        ik_opts.restarts = 0;
        for (int s = 1; s <= n; ++s) {
            const double u = static_cast<double>(s) / n;
            const RigidTransform sub{so3_exp(u * dr) * start.rotation, start.translation + u * dp};
            const IkResult ik = ik_solve(world_.robot, world_.tool_link, sub, q_ik_, ik_opts);
            if (!ik.converged)
                throw TaskFailure(phase_, "IK did not converge (position error " + std::to_string(ik.position_error) + " m)");
            const JointConfig q0 = joints();
            const double span = (ik.q - q0).cwiseAbs().maxCoeff();
            const double dist = (link_pose(world_.robot, ik.q, world_.tool_link).translation - tool().translation).norm();
            const double dt = ep_.control_dt;
            const int steps = std::max({1, static_cast<int>(std::ceil(span / (cfg_.max_joint_speed * dt) - 1e-9)),
                                        static_cast<int>(std::ceil(dist / (cfg_.max_tool_speed * dt) - 1e-9))});
            for (int k = 1; k <= steps; ++k) record(quantize(q0 + (ik.q - q0) * (static_cast<double>(k) / steps)), gripper_);
            q_ik_ = ik.q;
        }
    }

    void move_by(const Vec3& d) {
        const RigidTransform T = tool();
        move_tool({T.rotation, T.translation + d});
    }

    void set_gripper(double target) {
        const double g0 = gripper_;
        for (int k = 1; k <= cfg_.gripper_steps; ++k) record(ticks_, round9(g0 + (target - g0) * k / cfg_.gripper_steps));
    }

    void approach(const Primitive& p) {
        phase_ = "approach";
        const Vec3 c = state_.object(p.role).center();
        const Mat3 R = top_down(tool().rotation);
        move_tool({R, c + Vec3(0, 0, cfg_.approach_height)});
        move_tool({R, c});
    }

    void grasp(const Primitive& p) {
        phase_ = "grasp";
        set_gripper(1.0);
        const SceneObject& o = state_.object(p.role);
        const RigidTransform T = tool();
        const double d = (T.translation - o.center()).norm();
        if (!(d < cfg_.grasp_tolerance))
            throw TaskFailure(phase_, "tool is " + std::to_string(d) + " m from '" + p.role + "', beyond the grasp tolerance");
        held_ = p.role;
        grasp_offset_ = compose(T.inverse(), o.pose);
        grasp_origin_ = o.pose.translation;
    }

    /// Object-frame pose putting the held object's bounding-box bottom center at `point` with
    /// rotation R.
    RigidTransform resting_pose(const SceneObject& o, const Mat3& R, const Vec3& point) const {
        const Bounds b = bounds_at(o, {R, Vec3::Zero()});
        const Vec3 bottom(0.5 * (b.first.x() + b.second.x()), 0.5 * (b.first.y() + b.second.y()), b.first.z());
        return {R, point - bottom};
    }

    RigidTransform tool_for_object(const RigidTransform& obj) const { return compose(obj, grasp_offset_.inverse()); }

    void require_held(const std::string& role) {
        if (held_.empty() || (!role.empty() && held_ != role))
            throw TaskFailure(phase_, role.empty() ? "nothing is held" : "'" + role + "' is not held");
    }

    void transfer(const Primitive& p) {
        phase_ = "transfer";
        require_held(p.role);
        const SceneObject& o = state_.object(p.role);
        const Mat3 R = p.upright ? Mat3(rotation_between(o.pose.rotation.col(2), Vec3::UnitZ()) * o.pose.rotation) : o.pose.rotation;
        Vec3 base;
        if (p.anchor.empty()) {
            base = Vec3(grasp_origin_.x(), grasp_origin_.y(), aug_.object.support_height);
        } else {
            const SceneObject& a = state_.object(p.anchor);
            base = Vec3(a.pose.translation.x(), a.pose.translation.y(), p.on_top ? a.world_bounds().second.z() : aug_.object.support_height);
        }
        const RigidTransform goal = tool_for_object(resting_pose(o, R, base + p.offset));
        RigidTransform pre = goal;
        pre.translation.z() += cfg_.approach_height;
        Philox rng = Philox::stream(ep_.seed, "via", via_index_++);
        const RigidTransform via = sample_via_point(pre, aug_.trajectory, rng);
        move_by(Vec3(0, 0, cfg_.approach_height));
        move_tool(via);
        move_tool(pre);
        move_tool(goal);
    }

    void release() {
        phase_ = "release";
        set_gripper(0.0);
        held_.clear();
        move_by(Vec3(0, 0, cfg_.approach_height));
    }

    void update_push(const Vec3& tool_pos) {
        auto& o = state_.object(push_->role);
        const auto& a = *o.asset.articulation;
        double j;
        if (a.joint_type == ArticulationType::prismatic) {
            j = push_->j0 - (tool_pos - push_->contact0).dot(push_->closing);
        } else {
            const Vec3& w = push_->axis;
            Vec3 u0 = push_->contact0 - push_->hinge, u = tool_pos - push_->hinge;
            u0 -= w * w.dot(u0);
            u -= w * w.dot(u);
            j = push_->j0 + std::atan2(w.dot(u0.cross(u)), u0.dot(u));
        }
        o.joint = round9(std::clamp(j, a.limit_lower, o.joint));  // pushed, never pulled
    }

    void push_joint(const Primitive& p) {
        phase_ = "push_joint";
        const SceneObject& o = state_.object(p.role);
        const ArticulationSpec a = *o.asset.articulation;
        const Bounds bm = o.asset.parts.at(a.mobile_label).bounds();
        const Vec3 c0 = 0.5 * (bm.first + bm.second), ext = bm.second - bm.first;
        Vec3 d = a.axis;
        if (a.joint_type == ArticulationType::revolute) {
            d = c0 - a.origin;
            d -= a.axis * a.axis.dot(d);
            d.normalize();
        }
        const Vec3 contact_local = c0 + d * 0.5 * ext.cwiseAbs().dot(d.cwiseAbs());
        const RigidTransform pose = o.pose;
        auto contact = [&](double j) { return pose.apply(articulation_motion(a, j).apply(contact_local)); };
        const Vec3 axis_w = pose.rotation * a.axis, hinge_w = pose.apply(a.origin);
        auto closing = [&](double j) -> Vec3 {
            if (a.joint_type == ArticulationType::prismatic) return -axis_w;
            return -axis_w.cross(contact(j) - hinge_w).normalized();
        };
        const double j0 = o.joint, j_end = a.limit_lower - cfg_.push_overshoot;
        const Vec3 standoff = -0.04 * closing(j0);
        const Mat3 R = top_down(tool().rotation);
        move_tool({R, contact(j0) + standoff + Vec3(0, 0, cfg_.approach_height)});
        move_tool({R, contact(j0) + standoff});
        move_tool({R, contact(j0)});
        push_ = PushState{p.role, j0, contact(j0), closing(j0), hinge_w, axis_w};
        const double radius = a.joint_type == ArticulationType::revolute ? (contact(j0) - hinge_w).norm() : 1.0;
        const int n = std::max(1, static_cast<int>(std::ceil((j0 - j_end) * radius / cfg_.cartesian_step)));
        for (int s = 1; s <= n; ++s) move_tool({R, contact(j0 + (j_end - j0) * s / n)});
        push_.reset();
        move_by(-0.04 * closing(state_.object(p.role).joint));
        move_by(Vec3(0, 0, cfg_.approach_height));
    }

    void update_wipe() {
        const SceneObject& s = state_.object(wipe_->surface);
        const SceneObject& h = state_.object(held_);
        const double top = s.world_bounds().second.z();
        if (h.world_bounds().first.z() > top + 0.005) return;
        const Bounds hb = bounds_at(h, RigidTransform{});
        const RigidTransform inv = h.pose.inverse();
        for (std::size_t c = 0; c < wipe_->cells.size(); ++c) {
            if (wipe_->covered[c]) continue;
            const Vec3 local = inv.apply(s.pose.apply(wipe_->cells[c]));
            if (local.x() >= hb.first.x() && local.x() <= hb.second.x() && local.y() >= hb.first.y() && local.y() <= hb.second.y()) {
                wipe_->covered[c] = true;
                ++wipe_->count;
            }
        }
    }

    void wipe_path(const Primitive& p) {
        phase_ = "wipe_path";
        require_held("");
        const SceneObject& s = state_.object(p.role);
        const Bounds sb = bounds_at(s, RigidTransform{});
        constexpr double cell = 0.01, margin = 0.01, lane_spacing = 0.03;
        WipeState w;
        w.surface = p.role;
        const Vec3 span = sb.second - sb.first;
        const int nx = std::max(1, static_cast<int>(std::lround(span.x() / cell)));
        const int ny = std::max(1, static_cast<int>(std::lround(span.y() / cell)));
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                w.cells.emplace_back(sb.first.x() + (ix + 0.5) * span.x() / nx, sb.first.y() + (iy + 0.5) * span.y() / ny, sb.second.z());
        w.covered.assign(w.cells.size(), false);
        const SceneObject& h = state_.object(held_);
        const Mat3 R = h.pose.rotation;
        auto tool_at = [&](double x, double y) {
            return tool_for_object(resting_pose(h, R, s.pose.apply(Vec3(x, y, sb.second.z())) + Vec3(0, 0, 0.0005)));
        };
        const double x0 = sb.first.x() + margin, x1 = sb.second.x() - margin;
        const double y0 = sb.first.y() + margin, y1 = sb.second.y() - margin;
        const int lanes = std::max(2, static_cast<int>(std::ceil((y1 - y0) / lane_spacing)) + 1);
        RigidTransform first = tool_at(x0, y0);
        move_by(Vec3(0, 0, cfg_.approach_height));
        first.translation.z() += cfg_.approach_height;
        move_tool(first);
        wipe_ = std::move(w);
        for (int l = 0; l < lanes; ++l) {
            const double y = y0 + (y1 - y0) * l / (lanes - 1);
            const bool forward = l % 2 == 0;
            move_tool(tool_at(forward ? x0 : x1, y));
            move_tool(tool_at(forward ? x1 : x0, y));
        }
        move_by(Vec3(0, 0, cfg_.approach_height));
        coverage_ = round9(static_cast<double>(wipe_->count) / static_cast<double>(wipe_->cells.size()));
        wipe_.reset();
    }

    const DemoWorld& world_;
    const DemoConfig& cfg_;
    const AugmentationConfig& aug_;
    Episode& ep_;
    SceneState state_;
    std::vector<std::int64_t> ticks_;
    JointConfig q_ik_;  // last IK solution (unquantized), seeds the next solve
    double gripper_ = 0.0;
    std::string held_;
    RigidTransform grasp_offset_;  // tool⁻¹ ∘ object at grasp time
    Vec3 grasp_origin_ = Vec3::Zero();
    std::string phase_ = "start";
    std::uint64_t via_index_ = 0;
    std::optional<PushState> push_;
    std::optional<WipeState> wipe_;
    double coverage_ = 0.0;
};

}  // namespace detail

/// Rounded copy of the task (every float at 9 significant digits), as recorded in the episode.
inline TaskSpec recorded_task(const TaskSpec& t) {
    nlohmann::json j = to_json_value(t);
    round_json_floats(j);
    return task_spec_from_json(j);
}

/// Renders every frame of an episode from its recorded state.
inline std::vector<std::vector<Image8>> render_episode(const DemoWorld& world, const Episode& e, const EpisodeSplats& splats,
                                                       int threads = 1) {
    const SceneState initial = initial_scene_state(world, e.placements);
    std::vector<std::vector<Image8>> out;
    out.reserve(e.frames.size());
    for (const auto& f : e.frames) out.push_back(render_frame(world, splats, initial, f, e.cameras, threads));
    return out;
}

inline std::vector<std::vector<Image8>> render_episode(const DemoWorld& world, const Episode& e, int threads = 1) {
    const AugmentationConfig aug = augmentation_config_from_json(e.augmentation);
    return render_episode(world, e, build_episode_splats(world, e.placements, aug.lighting, e.seed), threads);
}

/// Places the task's objects, runs its phase script and renders every frame. Failures of the
/// script are recorded in failure_phase (success = false); configuration errors throw.
inline Episode run_task(const DemoWorld& world, const TaskSpec& task, const AugmentationConfig& aug, const DemoConfig& cfg,
                        std::uint64_t id, std::uint64_t seed) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    aug.validate();
    world.validate();
    task.validate(&world.assets);
    Episode e;
    e.id = id;
    e.seed = seed;
    e.task = recorded_task(task);
    e.control_dt = round9(cfg.dt());
    e.augmentation = aug;
    round_json_floats(e.augmentation);
    const AugmentationConfig aug_r = augmentation_config_from_json(e.augmentation);
    for (std::size_t k = 0; k < world.cameras.size(); ++k) {
        Philox rng = Philox::stream(seed, "camera", k);
        CameraModel c = perturb_camera(world.cameras[k], aug_r.camera, rng);
        nlohmann::json j = c;
        round_json_floats(j);
        e.cameras.push_back(j.get<CameraModel>());
    }
    try {
        e.placements = place_objects(world, e.task, aug_r.object, cfg.placement_attempts, seed);
    } catch (const TaskFailure& f) {
        e.failure_phase = f.phase();
    }
    if (e.failure_phase.empty()) {
        try {
            detail::TaskRunner runner(world, cfg, aug_r, e);
            runner.run();
        } catch (const TaskFailure& f) {
            e.failure_phase = f.phase();
            log::debug("episode aborted", {{"id", id}, {"phase", f.phase()}, {"reason", f.what()}});
        }
        LightingDraw draw;
        const EpisodeSplats splats = build_episode_splats(world, e.placements, aug_r.lighting, seed, &draw);
        e.lighting = {round9(draw.scale), round9(draw.offset)};
        if (cfg.render) e.images = render_episode(world, e, splats);
    }
    e.success = evaluate_episode_success(world, e);
    e.generation_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return e;
}

}  // namespace splatforge
