// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Damped least squares on the 6-vector pose error e = (p_target − p, w · log(R_target Rᵀ)),
// with a central-difference Jacobian, a per-iteration step bound and joint-limit clamping every
// step. A descent that stalls (at a joint limit or a singularity) is retried from seeded starts
// drawn inside the joint limits.
//
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "splatforge/core/random.hpp"
#include "splatforge/kinematics/robot_model.hpp"

namespace splatforge {

struct IkOptions {
    int max_iterations = 200;
    double damping = 0.05;
    double pos_tol = 1e-4;          // m
    double rot_tol = 1e-3;          // rad
    double rotation_weight = 1.0;   // 0 solves for position only
    double fd_step = 1e-6;
    double max_damping = 1e6;       // give up once rejected steps push λ past this
    double max_step = 0.5;          // bound on any |Δq_k| per iteration (rad or m)
    int restarts = 8;               // extra descents from random in-limit starts if the first stalls
    std::uint64_t seed = 0;         // restart stream
};

struct IkResult {
    JointConfig q;
    bool converged = false;
    int iterations = 0;
    double position_error = 0.0;  // m
    double rotation_error = 0.0;  // rad
    double residual = 0.0;        // weighted error norm
};

namespace detail {

inline Vec6 ik_error(const RobotModel& robot, const std::string& end_link, const RigidTransform& target, const JointConfig& q,
                     double rotation_weight) {
    const RigidTransform cur = link_pose(robot, q, end_link);
    Vec6 e;
    e.head<3>() = target.translation - cur.translation;
    e.tail<3>() = rotation_weight > 0 ? Vec3(rotation_weight * so3_log(target.rotation * cur.rotation.transpose())) : Vec3::Zero();
    return e;
}

}  // namespace detail

namespace detail {

inline IkResult ik_descend(const RobotModel& robot, const std::string& end_link, const RigidTransform& target, const JointConfig& q0,
                           const IkOptions& opts) {
    const int n = robot.dof();
    const double w = opts.rotation_weight;
    IkResult res;
    res.q = q0;
    auto measure = [&](const JointConfig& q, IkResult& r) {
        const RigidTransform cur = link_pose(robot, q, end_link);
        r.position_error = (target.translation - cur.translation).norm();
        r.rotation_error = rotation_angle(target.rotation * cur.rotation.transpose());
        r.converged = r.position_error <= opts.pos_tol && (w <= 0 || r.rotation_error <= opts.rot_tol);
    };
    Vec6 e = ik_error(robot, end_link, target, res.q, w);
    res.residual = e.norm();
    measure(res.q, res);
    double lambda = opts.damping;
    while (!res.converged && res.iterations < opts.max_iterations && n > 0) {
        ++res.iterations;
        // de/dq by central differences; the step moves against it.
        Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, n);
        for (int k = 0; k < n; ++k) {
            JointConfig qp = res.q, qm = res.q;
            qp[k] += opts.fd_step;
            qm[k] -= opts.fd_step;
            J.col(k) = -(ik_error(robot, end_link, target, qp, w) - ik_error(robot, end_link, target, qm, w)) / (2.0 * opts.fd_step);
        }
        const Eigen::Matrix<double, 6, 6> A = J * J.transpose() + lambda * lambda * Eigen::Matrix<double, 6, 6>::Identity();
        VecX dq = J.transpose() * A.ldlt().solve(e);
        const double biggest = dq.cwiseAbs().maxCoeff();
        if (biggest > opts.max_step) dq *= opts.max_step / biggest;
        const JointConfig q_new = robot.clamp(res.q + dq);
        const Vec6 e_new = ik_error(robot, end_link, target, q_new, w);
        if (e_new.norm() < res.residual) {
            res.q = q_new;
            e = e_new;
            res.residual = e.norm();
            measure(res.q, res);
            lambda *= 0.7;
        } else {
            lambda *= 2.0;
            if (lambda > opts.max_damping) break;
        }
    }
    return res;
}

}  // namespace detail

/// Starts from q0; if that descent does not converge, runs up to `restarts` more from seeded
/// uniform draws inside the joint limits and returns the first converged (or else the
/// lowest-residual) result. `iterations` counts every descent.
inline IkResult ik_solve(const RobotModel& robot, const std::string& end_link, const RigidTransform& target, const JointConfig& q0,
                         const IkOptions& opts = {}) {
    robot.link(end_link);
    robot.check_config(q0, true);
    if (!(opts.max_step > 0)) throw ValidationError("ik.max_step", "must be positive");
    if (opts.restarts < 0) throw ValidationError("ik.restarts", "must be >= 0");
    IkResult best = detail::ik_descend(robot, end_link, target, q0, opts);
    int total = best.iterations;
    const VecX lo = robot.lower_limits(), hi = robot.upper_limits();
    for (int r = 0; r < opts.restarts && !best.converged && robot.dof() > 0; ++r) {
        Philox rng = Philox::stream(opts.seed, "ik-restart", static_cast<std::uint64_t>(r));
        JointConfig q(robot.dof());
        for (int k = 0; k < q.size(); ++k) {
            // Unbounded joints draw within a turn (or a metre) of the start.
            const double a = std::isfinite(lo[k]) ? lo[k] : q0[k] - M_PI;
            const double b = std::isfinite(hi[k]) ? hi[k] : q0[k] + M_PI;
            q[k] = rng.uniform(a, b);
        }
        IkResult attempt = detail::ik_descend(robot, end_link, target, robot.clamp(q), opts);
        total += attempt.iterations;
        if (attempt.converged || attempt.residual < best.residual) best = std::move(attempt);
    }
    best.iterations = total;
    return best;
}

struct JointTrajectory {
    std::vector<double> timestamps;
    std::vector<JointConfig> configs;
    std::vector<RigidTransform> end_poses;  // end-link pose at each knot
    std::vector<std::size_t> waypoint_knots;  // knot index reached at each waypoint
};

/// Raised when a waypoint cannot be reached.
class PlanningError : public SolverError {
  public:
    PlanningError(std::size_t waypoint, const std::string& what)
        : SolverError("waypoint " + std::to_string(waypoint) + ": " + what), waypoint_(waypoint) {}
    std::size_t waypoint() const noexcept { return waypoint_; }

  private:
    std::size_t waypoint_;
};

struct PlanOptions {
    IkOptions ik;
    double max_joint_speed = 1.0;  // rad/s or m/s; sets the number of interpolation steps per segment
};

/// Solves IK for each waypoint (seeded by the previous solution) and interpolates linearly in
/// joint space at step_time resolution. The first knot is q_start at t = 0.
inline JointTrajectory plan_linear(const RobotModel& robot, const std::string& end_link, const JointConfig& q_start,
                                   const std::vector<RigidTransform>& waypoints, double step_time, const PlanOptions& opts = {}) {
    if (waypoints.empty()) throw ValidationError("waypoints", "at least one waypoint is required");
    if (!(step_time > 0)) throw ValidationError("step_time", "must be positive");
    if (!(opts.max_joint_speed > 0)) throw ValidationError("max_joint_speed", "must be positive");
    robot.check_config(q_start, true);
    JointTrajectory traj;
    auto push = [&](const JointConfig& q) {
        traj.timestamps.push_back(traj.timestamps.empty() ? 0.0 : traj.timestamps.back() + step_time);
        traj.configs.push_back(q);
        traj.end_poses.push_back(link_pose(robot, q, end_link));
    };
    push(q_start);
    JointConfig q = q_start;
    for (std::size_t w = 0; w < waypoints.size(); ++w) {
        const IkResult ik = ik_solve(robot, end_link, waypoints[w], q, opts.ik);
        if (!ik.converged)
            throw PlanningError(w, "IK did not converge (position error " + std::to_string(ik.position_error) + " m)");
        const double span = (ik.q - q).cwiseAbs().maxCoeff();
        const int steps = std::max(1, static_cast<int>(std::ceil(span / (opts.max_joint_speed * step_time) - 1e-12)));
        for (int s = 1; s <= steps; ++s) push(robot.clamp(q + (ik.q - q) * (static_cast<double>(s) / steps)));
        traj.waypoint_knots.push_back(traj.configs.size() - 1);
        q = ik.q;
    }
    return traj;
}

}  // namespace splatforge
