// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Photometric L1 loss and its analytic gradient with respect to a right-multiplied se(3)
// increment on world_to_camera: W(ξ) = W · exp(ξ), ξ = (ρ, φ).
//
// Per-splat screen-space quantities (mean, conic, color) are differentiated with forward-mode
// autodiff through the same projection code the renderer uses; the blending stage is
// differentiated by hand with a back-to-front sweep per pixel.
//
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "splatforge/render/rasterizer.hpp"

namespace splatforge {

struct PoseGradientResult {
    double loss = 0.0;
    Vec6 gradient = Vec6::Zero();  // (ρ, φ)
};

namespace detail {

using PoseAd = Eigen::AutoDiffScalar<Vec6>;

// Derivatives of one prepared splat's screen-space terms with respect to ξ (rows: ξ components).
struct SplatPoseJacobian {
    Eigen::Matrix<double, 2, 6> mean;
    Eigen::Matrix<double, 3, 6> conic;
    Eigen::Matrix<double, 3, 6> color;
};

inline SplatPoseJacobian splat_pose_jacobian(const GaussianSplat& g, int sh_degree, const CameraModel& cam,
                                             const RenderOptions& opts) {
    Vec3T<PoseAd> rho, phi;
    for (int k = 0; k < 3; ++k) {
        rho[k] = PoseAd(0.0, 6, k);
        phi[k] = PoseAd(0.0, 6, 3 + k);
    }
    // First-order expansion of exp(ξ) is exact for derivatives at ξ = 0.
    const Mat3T<PoseAd> Rw = cam.world_to_camera.rotation.cast<PoseAd>();
    const Mat3T<PoseAd> R = Rw * (Mat3T<PoseAd>::Identity() + skew<PoseAd>(phi));
    const Vec3T<PoseAd> t = Rw * rho + cam.world_to_camera.translation.cast<PoseAd>();
    const auto p = project_splat<PoseAd>(g, covariance3d(g), sh_degree, R, t, cam, opts.lowpass);
    SplatPoseJacobian J;
    for (int r = 0; r < 2; ++r) J.mean.row(r) = p.mean[r].derivatives().transpose();
    J.conic.row(0) = p.conic_a.derivatives().transpose();
    J.conic.row(1) = p.conic_b.derivatives().transpose();
    J.conic.row(2) = p.conic_c.derivatives().transpose();
    for (int r = 0; r < 3; ++r) J.color.row(r) = p.color[r].derivatives().transpose();
    return J;
}

// Accumulated dL/d(screen-space terms) for one prepared splat.
struct ScreenGrad {
    Vec2 mean = Vec2::Zero();
    Vec3 conic = Vec3::Zero();
    Vec3 color = Vec3::Zero();
};

}  // namespace detail

/// Mean absolute error over all pixels and channels between the render and `reference`.
inline double photometric_l1(const ImageD& render, const ImageD& reference) {
    if (!render.same_shape(reference)) throw ValidationError("reference", "image dimensions do not match");
    double s = 0.0;
    for (std::size_t i = 0; i < render.data.size(); ++i) s += std::abs(render.data[i] - reference.data[i]);
    return s / static_cast<double>(render.data.size());
}

namespace detail {

// Backpropagates per-pixel color gradients to ξ. pixel_grad(tile, x, y, color) returns
// dL/dcolor for that pixel; it may also record per-tile state such as the loss.
template <class PixelGrad>
Vec6 pose_gradient_pass(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts, const FrameSetup& fs,
                        PixelGrad&& pixel_grad) {
    // Per tile, per list slot accumulation keeps the reduction order independent of threading.
    std::vector<std::vector<ScreenGrad>> tile_grads(fs.tile_lists.size());
    for (std::size_t t = 0; t < fs.tile_lists.size(); ++t) tile_grads[t].resize(fs.tile_lists[t].size());
    // Position of each prepared splat inside each tile list.
    std::vector<std::vector<std::uint32_t>> slot_in_tile(fs.tile_lists.size());
    for (std::size_t t = 0; t < fs.tile_lists.size(); ++t) {
        auto& m = slot_in_tile[t];
        m.assign(fs.splats.size(), 0);
        for (std::uint32_t s = 0; s < fs.tile_lists[t].size(); ++s) m[fs.tile_lists[t][s]] = s;
    }

    blend_tiles(fs, cam, opts, [&](std::size_t tile, int x, int y, std::span<const Contribution> cs, double T) {
        const Vec3 g = pixel_grad(tile, x, y, composite_color(fs, cs, T, opts.background));
        if (g.isZero()) return;
        Vec3 behind = opts.background;  // color seen just behind contributor i
        for (auto it = cs.rbegin(); it != cs.rend(); ++it) {
            const PreparedSplat& s = fs.splats[it->prepared];
            auto& acc = tile_grads[tile][slot_in_tile[tile][it->prepared]];
            const double a = it->alpha;
            const double Ti = it->transmittance;
            acc.color += g * (a * Ti);
            const double dL_dalpha = Ti * g.dot(s.color - behind);
            behind = s.color * a + behind * (1.0 - a);
            const double dx = x - s.mean.x();
            const double dy = y - s.mean.y();
            const double dp =
                dL_dalpha * falloff(s.opacity, splat_power(s, x, y), opts.cutoff_sigma, opts.cutoff_taper).d_alpha_d_power;
            acc.mean += dp * Vec2(s.conic_a * dx + s.conic_b * dy, s.conic_c * dy + s.conic_b * dx);
            acc.conic += dp * Vec3(-0.5 * dx * dx, -dx * dy, -0.5 * dy * dy);
        }
    });

    std::vector<ScreenGrad> per_splat(fs.splats.size());
    for (std::size_t t = 0; t < fs.tile_lists.size(); ++t)
        for (std::size_t s = 0; s < fs.tile_lists[t].size(); ++s) {
            auto& dst = per_splat[fs.tile_lists[t][s]];
            const auto& src = tile_grads[t][s];
            dst.mean += src.mean;
            dst.conic += src.conic;
            dst.color += src.color;
        }

    Vec6 grad = Vec6::Zero();
    for (std::size_t k = 0; k < fs.splats.size(); ++k) {
        const auto& sg = per_splat[k];
        if (sg.mean.isZero() && sg.conic.isZero() && sg.color.isZero()) continue;
        const auto J = splat_pose_jacobian(scene.splats[fs.splats[k].index], scene.sh_degree, cam, opts);
        grad += J.mean.transpose() * sg.mean + J.conic.transpose() * sg.conic + J.color.transpose() * sg.color;
    }
    return grad;
}

}  // namespace detail

inline PoseGradientResult render_with_pose_gradient(const GaussianScene& scene, const CameraModel& cam,
                                                    const ImageD& reference, const RenderOptions& opts = {}) {
    if (reference.width != cam.width || reference.height != cam.height || reference.channels != 3)
        throw ValidationError("reference", "reference must be " + std::to_string(cam.width) + "x" +
                                               std::to_string(cam.height) + "x3");
    const FrameSetup fs = prepare_frame(scene, cam, opts);
    const double norm = 1.0 / (3.0 * cam.width * cam.height);
    std::vector<double> tile_loss(fs.tile_lists.size(), 0.0);
    PoseGradientResult res;
    res.gradient = detail::pose_gradient_pass(scene, cam, opts, fs, [&](std::size_t tile, int x, int y, const Vec3& c) {
        Vec3 g;
        for (int k = 0; k < 3; ++k) {
            const double r = c[k] - reference.at(x, y, k);
            tile_loss[tile] += std::abs(r);
            g[k] = (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) * norm;
        }
        return g;
    });
    for (const double l : tile_loss) res.loss += l;
    res.loss *= norm;
    return res;
}

/// Gradient with respect to ξ of any loss whose derivative with respect to the rendered color
/// image is `dL_dcolor` (H×W×3), evaluated at the current pose.
inline Vec6 pose_gradient_from_color_grad(const GaussianScene& scene, const CameraModel& cam, const ImageD& dL_dcolor,
                                          const RenderOptions& opts = {}) {
    if (dL_dcolor.width != cam.width || dL_dcolor.height != cam.height || dL_dcolor.channels != 3)
        throw ValidationError("dL_dcolor", "gradient image must match the camera");
    const FrameSetup fs = prepare_frame(scene, cam, opts);
    return detail::pose_gradient_pass(scene, cam, opts, fs, [&](std::size_t, int x, int y, const Vec3&) {
        return Vec3(dL_dcolor.at(x, y, 0), dL_dcolor.at(x, y, 1), dL_dcolor.at(x, y, 2));
    });
}

/// Loss only (no gradient); same definition as render_with_pose_gradient.
inline double photometric_loss(const GaussianScene& scene, const CameraModel& cam, const ImageD& reference,
                               const RenderOptions& opts = {}) {
    RenderOptions o = opts;
    o.render_features = false;
    return photometric_l1(rasterize(scene, cam, o).color, reference);
}

}  // namespace splatforge
