// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/camera.hpp"
#include "splatforge/core/error.hpp"
#include "splatforge/scene/gaussian.hpp"

namespace splatforge {

struct RenderOptions {
    Vec3 background = Vec3::Zero();
    double transmittance_eps = 1e-4;  // stop blending once T drops below this
    double lowpass = 0.3;             // px², added to the projected covariance
    double cutoff_sigma = 3.0;        // ellipse cutoff in standard deviations
    double cutoff_taper = 0.5;        // α fades smoothly to 0 over this many σ before the cutoff; 0 = hard edge
    double near = 0.01;
    double far = 1000.0;
    int tile_size = 16;
    int threads = 0;  // 0 = hardware concurrency
    bool render_features = false;
};

inline void to_json(nlohmann::json& j, const RenderOptions& o) {
    j = {{"background", {o.background.x(), o.background.y(), o.background.z()}},
         {"transmittance_eps", o.transmittance_eps},
         {"lowpass", o.lowpass},
         {"cutoff_sigma", o.cutoff_sigma},
         {"cutoff_taper", o.cutoff_taper},
         {"near", o.near},
         {"far", o.far},
         {"tile_size", o.tile_size},
         {"threads", o.threads}};
}

/// Screen-space footprint of one splat.
struct Projected2D {
    Vec2 mean2d;
    Mat2 cov2d;  // includes the low-pass term
    double depth;
    std::size_t splat_index;
};

/// Camera-frame quantities of one splat, templated so the same code path can be
/// differentiated with forward-mode autodiff.
template <class S>
struct SplatProjection {
    Eigen::Matrix<S, 2, 1> mean;
    Eigen::Matrix<S, 2, 2> cov;
    S conic_a, conic_b, conic_c;  // inverse of cov: [[a, b], [b, c]]
    S depth;
    Eigen::Matrix<S, 3, 1> color;
};

/// Projects a splat through the pinhole model with a local-affine (Jacobian) approximation:
/// cov2d = J R Σ Rᵀ Jᵀ + lowpass·I, where R is the world-to-camera rotation.
/// Color comes from the SH evaluated along the ray from the camera center to the splat mean,
/// offset by 0.5 and clamped to [0, 1].
template <class S>
SplatProjection<S> project_splat(const GaussianSplat& g, const Mat3& world_cov, int sh_degree, const Mat3T<S>& R,
                                 const Vec3T<S>& t, const CameraModel& cam, double lowpass) {
    using std::sqrt;
    SplatProjection<S> out;
    const Vec3T<S> p = g.position.template cast<S>();
    const Vec3T<S> pc = R * p + t;
    const S z = pc.z();
    out.depth = z;
    const S inv_z = S(1) / z;
    out.mean << S(cam.fx) * pc.x() * inv_z + S(cam.cx), S(cam.fy) * pc.y() * inv_z + S(cam.cy);

    Eigen::Matrix<S, 2, 3> J;
    J << S(cam.fx) * inv_z, S(0), -S(cam.fx) * pc.x() * inv_z * inv_z,
         S(0), S(cam.fy) * inv_z, -S(cam.fy) * pc.y() * inv_z * inv_z;
    const Mat3T<S> M = R * world_cov.template cast<S>() * R.transpose();
    out.cov = J * M * J.transpose();
    out.cov(0, 0) += S(lowpass);
    out.cov(1, 1) += S(lowpass);
    const S det = out.cov(0, 0) * out.cov(1, 1) - out.cov(0, 1) * out.cov(1, 0);
    out.conic_a = out.cov(1, 1) / det;
    out.conic_b = -out.cov(0, 1) / det;
    out.conic_c = out.cov(0, 0) / det;

    const Vec3T<S> center = -(R.transpose() * t);
    Vec3T<S> dir = p - center;
    const S n = sqrt(dir.squaredNorm());
    dir /= n;
    Vec3T<S> c = sh::evaluate<S>(sh_degree, g.sh, dir);
    for (int k = 0; k < 3; ++k) {
        c[k] += S(0.5);
        if (c[k] < S(0)) c[k] = S(0) * c[k];
        if (c[k] > S(1)) c[k] = S(1) + S(0) * c[k];
    }
    out.color = c;
    return out;
}

/// Largest eigenvalue of a symmetric 2x2 matrix.
inline double max_eigenvalue(const Mat2& m) {
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double d = 0.5 * (m(0, 0) - m(1, 1));
    return mid + std::sqrt(std::max(0.0, d * d + m(0, 1) * m(1, 0)));
}

/// Projects one splat; nullopt when its camera-frame depth is not beyond the near plane.
inline std::optional<Projected2D> project_gaussian(const GaussianSplat& g, const CameraModel& cam, int sh_degree = 0,
                                                   const RenderOptions& opts = {}, std::size_t index = 0) {
    const Vec3 pc = cam.world_to_camera.apply(g.position);
    if (!(pc.z() > opts.near)) return std::nullopt;
    const auto p = project_splat<double>(g, covariance3d(g), sh_degree, cam.world_to_camera.rotation,
                                         cam.world_to_camera.translation, cam, opts.lowpass);
    return Projected2D{p.mean, p.cov, p.depth, index};
}

/// Indices of splats with depth in (near, far) whose projected mean lies inside the image
/// rectangle dilated by margin · (cutoff_sigma · largest projected std-dev).
inline std::vector<std::size_t> cull_frustum(const GaussianScene& scene, const CameraModel& cam, double margin = 1.0,
                                             const RenderOptions& opts = {}) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        const auto& g = scene.splats[i];
        const double z = cam.world_to_camera.apply(g.position).z();
        if (!(z > opts.near && z < opts.far)) continue;
        const auto p = project_gaussian(g, cam, 0, opts, i);
        const double ext = margin * opts.cutoff_sigma * std::sqrt(max_eigenvalue(p->cov2d));
        const Vec2& m = p->mean2d;
        if (m.x() >= -0.5 - ext && m.x() <= cam.width - 0.5 + ext && m.y() >= -0.5 - ext && m.y() <= cam.height - 0.5 + ext)
            keep.push_back(i);
    }
    return keep;
}

}  // namespace splatforge
