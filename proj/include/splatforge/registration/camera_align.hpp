// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Camera pose refinement by descent on the photometric L1 loss. The pose is updated as
// W ← W · exp(ξ); steps are chosen in the camera frame (ξ_cam = Ad_W ξ) so the optimizer
// is unaffected by a rigid change of world coordinates, and translation is scaled by the
// scene depth so rotation and translation move image content at comparable rates.
//
// Pyramid level l compares 2^l × 2^l box averages of the full-resolution render and of the
// target image; rendering stays at full resolution, so the loss at a perfectly posed camera
// is exactly zero at every level.
//
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/json_fields.hpp"
#include "splatforge/render/pose_gradient.hpp"

namespace splatforge {

enum class DescentDirection { gradient, bfgs };

struct CamAlignParams {
    DescentDirection direction = DescentDirection::bfgs;
    int max_iterations = 150;     // per pyramid level
    double step_size = 0.01;      // initial step length in the preconditioned metric (radians)
    int pyramid_levels = 3;
    double loss_tolerance = 1e-7; // stop a level when the relative loss decrease falls below this
    double armijo = 1e-4;
    double min_step = 1e-9;
    double depth_scale = 0.0;     // metres; 0 = median depth of the splats in view at the start

    void validate() const {
        if (max_iterations < 1) throw ConfigError("camera_align.max_iterations must be >= 1");
        if (!(step_size > 0)) throw ConfigError("camera_align.step_size must be positive");
        if (pyramid_levels < 1) throw ConfigError("camera_align.pyramid_levels must be >= 1");
        if (!(loss_tolerance > 0)) throw ConfigError("camera_align.loss_tolerance must be positive");
        if (!(armijo > 0 && armijo < 1)) throw ConfigError("camera_align.armijo must be in (0, 1)");
        if (!(min_step > 0)) throw ConfigError("camera_align.min_step must be positive");
        if (depth_scale < 0) throw ConfigError("camera_align.depth_scale must be non-negative");
    }
};

inline void to_json(nlohmann::json& j, const CamAlignParams& p) {
    j = {{"direction", p.direction == DescentDirection::bfgs ? "bfgs" : "gradient"},
         {"max_iterations", p.max_iterations}, {"step_size", p.step_size}, {"pyramid_levels", p.pyramid_levels},
         {"loss_tolerance", p.loss_tolerance}, {"armijo", p.armijo}, {"min_step", p.min_step}, {"depth_scale", p.depth_scale}};
}

inline CamAlignParams cam_align_params_from_json(const nlohmann::json& j, const std::string& path = "camera_align") {
    CamAlignParams p;
    JsonFields f(j, path);
    std::string dir = p.direction == DescentDirection::bfgs ? "bfgs" : "gradient";
    f.get("direction", dir);
    if (dir != "bfgs" && dir != "gradient") throw ConfigError(path + ".direction must be 'bfgs' or 'gradient'");
    p.direction = dir == "bfgs" ? DescentDirection::bfgs : DescentDirection::gradient;
    f.get("max_iterations", p.max_iterations).get("step_size", p.step_size).get("pyramid_levels", p.pyramid_levels);
    f.get("loss_tolerance", p.loss_tolerance).get("armijo", p.armijo).get("min_step", p.min_step).get("depth_scale", p.depth_scale);
    f.finish();
    p.validate();
    return p;
}

struct CamAlignResult {
    CameraModel camera;
    double final_loss = 0.0;           // at full resolution
    std::vector<double> trace;         // loss after every accepted iterate, starting with the initial one per level
    std::vector<int> trace_level;      // pyramid level of each trace entry
    int iterations = 0;
};

inline nlohmann::json to_json_report(const CamAlignResult& r) {
    return {{"world_to_camera", to_json_matrix(r.camera.world_to_camera)},
            {"final_loss", r.final_loss},
            {"iterations", r.iterations},
            {"trace", r.trace},
            {"trace_level", r.trace_level}};
}

/// Adjoint of T acting on (ρ, φ): T exp(ξ) T⁻¹ = exp(Ad_T ξ).
inline Eigen::Matrix<double, 6, 6> adjoint(const RigidTransform& T) {
    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    A.topLeftCorner<3, 3>() = T.rotation;
    A.topRightCorner<3, 3>() = skew<double>(T.translation) * T.rotation;
    A.bottomRightCorner<3, 3>() = T.rotation;
    return A;
}

namespace detail {

inline ImageD box_pyramid(ImageD img, int level) {
    for (int l = 0; l < level; ++l) img = downsample_box2(img);
    return img;
}

inline double median_view_depth(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts) {
    std::vector<double> z;
    for (const std::size_t i : cull_frustum(scene, cam, 0.0, opts)) z.push_back(cam.world_to_camera.apply(scene.splats[i].position).z());
    if (z.empty()) return 1.0;
    std::nth_element(z.begin(), z.begin() + z.size() / 2, z.end());
    return z[z.size() / 2];
}

class PyramidLoss {
  public:
    PyramidLoss(const GaussianScene& scene, const CameraModel& cam, const ImageD& target, int level, const RenderOptions& opts)
        : scene_(scene), cam_(cam), opts_(opts), level_(level), target_(box_pyramid(target, level)) {
        opts_.render_features = false;
    }

    double loss(const RigidTransform& W) const {
        CameraModel c = cam_;
        c.world_to_camera = W;
        return photometric_l1(box_pyramid(rasterize(scene_, c, opts_).color, level_), target_);
    }

    /// Loss and gradient with respect to the right increment ξ.
    std::pair<double, Vec6> loss_and_gradient(const RigidTransform& W) const {
        CameraModel c = cam_;
        c.world_to_camera = W;
        const ImageD full = rasterize(scene_, c, opts_).color;
        const ImageD coarse = box_pyramid(full, level_);
        const double loss = photometric_l1(coarse, target_);
        const int f = 1 << level_;
        // Levels shrink by floor division, so coarse pixel (X, Y) averages the f×f block at (fX, fY).
        const double w = 1.0 / (3.0 * coarse.width * coarse.height * f * f);
        ImageD g(full.width, full.height, 3);
        if (coarse.width * f > full.width || coarse.height * f > full.height) {
            // Image smaller than one block: downsample_box2 is a no-op there.
            return {loss, pose_gradient_from_color_grad(scene_, c, sign_image(coarse, 1.0 / (3.0 * coarse.width * coarse.height)), opts_)};
        }
        for (int y = 0; y < coarse.height * f; ++y)
            for (int x = 0; x < coarse.width * f; ++x)
                for (int k = 0; k < 3; ++k) {
                    const double r = coarse.at(x / f, y / f, k) - target_.at(x / f, y / f, k);
                    g.at(x, y, k) = (r > 0 ? w : (r < 0 ? -w : 0.0));
                }
        return {loss, pose_gradient_from_color_grad(scene_, c, g, opts_)};
    }

  private:
    ImageD sign_image(const ImageD& coarse, double w) const {
        ImageD g(coarse.width, coarse.height, 3);
        for (int y = 0; y < coarse.height; ++y)
            for (int x = 0; x < coarse.width; ++x)
                for (int k = 0; k < 3; ++k) {
                    const double r = coarse.at(x, y, k) - target_.at(x, y, k);
                    g.at(x, y, k) = (r > 0 ? w : (r < 0 ? -w : 0.0));
                }
        return g;
    }

    const GaussianScene& scene_;
    CameraModel cam_;
    RenderOptions opts_;
    int level_;
    ImageD target_;
};

}  // namespace detail

inline CamAlignResult align_camera(const GaussianScene& scene, const ImageD& real_image, const CameraModel& init,
                                   const CamAlignParams& params = {}, const RenderOptions& opts = {}) {
    params.validate();
    init.validate();
    if (real_image.width != init.width || real_image.height != init.height || real_image.channels != 3)
        throw ValidationError("image", "image is " + std::to_string(real_image.width) + "x" + std::to_string(real_image.height) +
                                           "x" + std::to_string(real_image.channels) + ", camera expects " +
                                           std::to_string(init.width) + "x" + std::to_string(init.height) + "x3");
    CamAlignResult res;
    res.camera = init;
    RigidTransform W = init.world_to_camera;
    const double depth = params.depth_scale > 0 ? params.depth_scale : detail::median_view_depth(scene, init, opts);
    Vec6 metric;  // diagonal preconditioner in camera-frame coordinates
    metric << depth * depth, depth * depth, depth * depth, 1.0, 1.0, 1.0;

    auto check = [&](double loss, const RigidTransform& T, int level) {
        if (!std::isfinite(loss))
            throw SolverError("camera alignment: non-finite loss at level " + std::to_string(level) +
                              ", iterate " + to_json_matrix(T).dump());
    };

    // Optimization variable per step: z = M^{-1/2} ξ_cam, with the camera-frame increment applied
    // as exp(ξ_cam) · W = W · exp(Ad_W⁻¹ ξ_cam). In z the metric is the identity.
    const Vec6 sqrt_metric = metric.cwiseSqrt();
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    for (int level = params.pyramid_levels - 1; level >= 0; --level) {
        const detail::PyramidLoss obj(scene, init, real_image, level, opts);
        auto [f, g_right] = obj.loss_and_gradient(W);
        check(f, W, level);
        res.trace.push_back(f);
        res.trace_level.push_back(level);
        auto z_gradient = [&](const RigidTransform& T, const Vec6& gr) {
            // dL/dξ_cam = Ad_W^{-T} dL/dξ_right, then chain through ξ_cam = M^{1/2} z.
            return Vec6(sqrt_metric.cwiseProduct(adjoint(T).transpose().fullPivLu().solve(gr)));
        };
        Vec6 gz = z_gradient(W, g_right);
        Mat6 H = Mat6::Identity();  // inverse Hessian estimate in z
        bool have_curvature = false;
        double step = params.step_size;
        for (int it = 0; it < params.max_iterations && f > 0.0; ++it) {
            const double gnorm = gz.norm();
            if (!(gnorm > 0)) break;
            Vec6 dir;
            double t;
            if (params.direction == DescentDirection::bfgs && have_curvature) {
                dir = -H * gz;
                if (dir.dot(gz) >= 0) {  // not a descent direction: restart from the gradient
                    H = Mat6::Identity();
                    have_curvature = false;
                    dir = -gz / gnorm;
                    t = step;
                } else {
                    t = 1.0;
                }
            } else {
                dir = -gz / gnorm;
                t = step;
            }
            const double slope = dir.dot(gz);  // < 0
            const Mat6 Ad = adjoint(W);
            bool accepted = false;
            double f_try = f;
            RigidTransform W_try;
            while (t * dir.norm() >= params.min_step) {
                const Vec6 xi_cam = sqrt_metric.cwiseProduct(t * dir);
                W_try = compose(W, se3_exp(Ad.fullPivLu().solve(xi_cam)));
                f_try = obj.loss(W_try);
                check(f_try, W_try, level);
                if (f_try <= f + params.armijo * t * slope) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                if (have_curvature) {  // retry once along the plain gradient
                    H = Mat6::Identity();
                    have_curvature = false;
                    continue;
                }
                break;
            }
            ++res.iterations;
            const double rel = (f - f_try) / f;
            const Vec6 s_step = t * dir;
            W = W_try;
            std::tie(f, g_right) = obj.loss_and_gradient(W);
            res.trace.push_back(f);
            res.trace_level.push_back(level);
            const Vec6 gz_new = z_gradient(W, g_right);
            if (params.direction == DescentDirection::bfgs) {
                const Vec6 y = gz_new - gz;
                const double sy = s_step.dot(y);
                if (sy > 1e-12 * s_step.norm() * y.norm()) {
                    if (!have_curvature) H = (sy / y.dot(y)) * Mat6::Identity();
                    const double r = 1.0 / sy;
                    const Mat6 V = Mat6::Identity() - r * y * s_step.transpose();
                    H = V.transpose() * H * V + r * s_step * s_step.transpose();
                    have_curvature = true;
                }
            } else {
                step = 2.0 * t;
            }
            if (params.direction == DescentDirection::bfgs && !have_curvature) step = 2.0 * t;
            gz = gz_new;
            if (rel < params.loss_tolerance) break;
        }
    }
    res.camera.world_to_camera = W;
    RenderOptions o = opts;
    o.render_features = false;
    res.final_loss = photometric_l1(rasterize(scene, res.camera, o).color, real_image);
    return res;
}

}  // namespace splatforge
