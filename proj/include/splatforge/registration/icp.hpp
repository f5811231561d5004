// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Point-to-point ICP: nearest-neighbor correspondences from src into dst, trimmed, then a
// closed-form rigid fit minimizing Σ ‖R p_i + t − q_i‖².
//
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/json_fields.hpp"
#include "splatforge/core/rigid_transform.hpp"
#include "splatforge/registration/kd_tree.hpp"

namespace splatforge {

struct IcpParams {
    int max_iterations = 50;
    double correspondence_cutoff = 0.5;  // m
    double convergence_eps = 1e-7;       // m, on the per-iteration RMS decrease
    double trim_fraction = 0.1;

    void validate() const {
        if (max_iterations < 1) throw ConfigError("icp.max_iterations must be >= 1");
        if (!(correspondence_cutoff > 0)) throw ConfigError("icp.correspondence_cutoff must be positive");
        if (!(convergence_eps > 0)) throw ConfigError("icp.convergence_eps must be positive");
        if (!(trim_fraction >= 0 && trim_fraction < 1)) throw ConfigError("icp.trim_fraction must be in [0, 1)");
    }
};

inline void to_json(nlohmann::json& j, const IcpParams& p) {
    j = {{"max_iterations", p.max_iterations}, {"correspondence_cutoff", p.correspondence_cutoff},
         {"convergence_eps", p.convergence_eps}, {"trim_fraction", p.trim_fraction}};
}

inline IcpParams icp_params_from_json(const nlohmann::json& j, const std::string& path = "icp") {
    IcpParams p;
    JsonFields f(j, path);
    f.get("max_iterations", p.max_iterations).get("correspondence_cutoff", p.correspondence_cutoff);
    f.get("convergence_eps", p.convergence_eps).get("trim_fraction", p.trim_fraction);
    f.finish();
    p.validate();
    return p;
}

struct IcpIteration {
    std::size_t correspondences = 0;
    double rms_before = 0.0;  // with the previous transform
    double rms_after = 0.0;   // after the rigid fit, same correspondences
};

struct IcpResult {
    RigidTransform transform;  // maps src toward dst
    double rms_residual = 0.0;
    int iterations_used = 0;
    bool converged = false;
    std::vector<IcpIteration> trace;
};

inline nlohmann::json to_json_report(const IcpResult& r) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& it : r.trace)
        trace.push_back({{"correspondences", it.correspondences}, {"rms_before", it.rms_before}, {"rms_after", it.rms_after}});
    return {{"transform", to_json_matrix(r.transform)},
            {"rms_residual", r.rms_residual},
            {"iterations_used", r.iterations_used},
            {"converged", r.converged},
            {"trace", trace}};
}

/// Least-squares rigid transform taking p_i to q_i (SVD of the cross-covariance, with the
/// sign of the last singular direction flipped when needed so the result is a rotation).
inline RigidTransform fit_rigid(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
    if (p.size() != q.size()) throw ValidationError("points", "point sets differ in size");
    if (p.size() < 3) throw SolverError("rigid fit needs at least 3 correspondences, got " + std::to_string(p.size()));
    Vec3 cp = Vec3::Zero(), cq = Vec3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
        cp += p[i];
        cq += q[i];
    }
    cp /= static_cast<double>(p.size());
    cq /= static_cast<double>(q.size());
    Mat3 H = Mat3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) H += (p[i] - cp) * (q[i] - cq).transpose();
    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 s = svd.singularValues();
    if (!(s[0] > 0) || s[1] <= 1e-12 * s[0]) throw SolverError("degenerate correspondence set (cross-covariance rank < 2)");
    const Mat3 U = svd.matrixU(), V = svd.matrixV();
    Mat3 D = Mat3::Identity();
    if ((V * U.transpose()).determinant() < 0) D(2, 2) = -1.0;
    const Mat3 R = V * D * U.transpose();
    return {R, cq - R * cp};
}

inline IcpResult icp_align(const std::vector<Vec3>& src, const KdTree& dst, const RigidTransform& init, const IcpParams& params = {}) {
    params.validate();
    if (src.size() < 3 || dst.size() < 3) throw SolverError("ICP needs at least 3 points in each cloud");
    if (!init.is_valid(1e-6)) throw ValidationError("init", "not a rigid transform");
    IcpResult res;
    res.transform = init;
    const double cutoff2 = params.correspondence_cutoff * params.correspondence_cutoff;
    struct Pair {
        double d2;
        std::size_t src, dst;
    };
    std::vector<Pair> pairs;
    std::vector<Vec3> P, Q;
    for (int it = 0; it < params.max_iterations; ++it) {
        pairs.clear();
        for (std::size_t i = 0; i < src.size(); ++i) {
            const auto hit = dst.nearest(res.transform.apply(src[i]));
            if (hit.squared_distance <= cutoff2) pairs.push_back({hit.squared_distance, i, hit.index});
        }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d2 < b.d2; });
        const auto drop = static_cast<std::size_t>(std::floor(params.trim_fraction * static_cast<double>(pairs.size())));
        pairs.resize(pairs.size() - drop);
        if (pairs.size() < 3)
            throw SolverError("ICP iteration " + std::to_string(it + 1) + ": only " + std::to_string(pairs.size()) +
                              " correspondences within the cutoff");
        P.clear();
        Q.clear();
        double before = 0.0;
        for (const auto& pr : pairs) {
            P.push_back(src[pr.src]);
            Q.push_back(dst.points()[pr.dst]);
            before += pr.d2;
        }
        const RigidTransform T = fit_rigid(P, Q);
        double after = 0.0;
        for (std::size_t k = 0; k < P.size(); ++k) after += (T.apply(P[k]) - Q[k]).squaredNorm();
        const double n = static_cast<double>(P.size());
        IcpIteration rec{P.size(), std::sqrt(before / n), std::sqrt(after / n)};
        res.trace.push_back(rec);
        res.transform = T;
        res.rms_residual = rec.rms_after;
        res.iterations_used = it + 1;
        if (rec.rms_before - rec.rms_after < params.convergence_eps) {
            res.converged = true;
            break;
        }
    }
    return res;
}

inline IcpResult icp_align(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, const RigidTransform& init,
                           const IcpParams& params = {}) {
    if (dst.size() < 3) throw SolverError("ICP needs at least 3 points in each cloud");
    return icp_align(src, KdTree(dst), init, params);
}

}  // namespace splatforge
