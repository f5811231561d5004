// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic CPU tile rasterizer. Every pixel blends its contributors front to back in
// (camera depth, splat index) order:
//   C = Σ_i c_i α_i Π_{j<i}(1 − α_j) + T_final · background
// with α_i = opacity_i · exp(−½ Δᵀ cov2d⁻¹ Δ), faded to zero just inside the cutoff ellipse. Features are blended with the same weights.
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "splatforge/core/image.hpp"
#include "splatforge/core/parallel.hpp"
#include "splatforge/render/projection.hpp"

namespace splatforge {

struct RenderOutput {
    ImageD color;    // H×W×3
    ImageD alpha;    // H×W×1, accumulated opacity 1 − T_final
    ImageD feature;  // H×W×d, empty unless requested
    Image<int> contributors;
};

/// Screen-space data of a visible splat, ready for blending.
struct PreparedSplat {
    Vec2 mean;
    double conic_a, conic_b, conic_c;
    double opacity;
    Vec3 color;
    double depth;
    double radius;  // half-size of the cutoff bounding box, pixels
    std::uint32_t index;
};

struct FrameSetup {
    std::vector<PreparedSplat> splats;
    int tiles_x = 0;
    int tiles_y = 0;
    int tile_size = 16;
    std::vector<std::vector<std::uint32_t>> tile_lists;  // indices into `splats`, depth-sorted
};

struct Contribution {
    std::uint32_t prepared;  // index into FrameSetup::splats
    double alpha;
    double transmittance;  // T before this contribution
};

inline FrameSetup prepare_frame(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts) {
    if (cam.width <= 0 || cam.height <= 0) throw ValidationError("camera.size", "image dimensions must be positive");
    if (opts.tile_size <= 0) throw ValidationError("render.tile_size", "must be positive");
    FrameSetup fs;
    fs.tile_size = opts.tile_size;
    fs.tiles_x = (cam.width + opts.tile_size - 1) / opts.tile_size;
    fs.tiles_y = (cam.height + opts.tile_size - 1) / opts.tile_size;
    fs.tile_lists.resize(static_cast<std::size_t>(fs.tiles_x) * fs.tiles_y);

    const Mat3& R = cam.world_to_camera.rotation;
    const Vec3& t = cam.world_to_camera.translation;
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        const auto& g = scene.splats[i];
        const double z = (R * g.position + t).z();
        if (!(z > opts.near && z < opts.far)) continue;
        const auto p = project_splat<double>(g, covariance3d(g), scene.sh_degree, R, t, cam, opts.lowpass);
        const double det = p.cov(0, 0) * p.cov(1, 1) - p.cov(0, 1) * p.cov(1, 0);
        if (!(det > 0) || !p.mean.allFinite()) continue;
        const double radius = opts.cutoff_sigma * std::sqrt(max_eigenvalue(p.cov));
        const double x0 = std::ceil(p.mean.x() - radius), x1 = std::floor(p.mean.x() + radius);
        const double y0 = std::ceil(p.mean.y() - radius), y1 = std::floor(p.mean.y() + radius);
        if (x1 < 0 || y1 < 0 || x0 > cam.width - 1 || y0 > cam.height - 1 || x0 > x1 || y0 > y1) continue;
        const auto slot = static_cast<std::uint32_t>(fs.splats.size());
        fs.splats.push_back({p.mean, p.conic_a, p.conic_b, p.conic_c, g.opacity(), p.color, p.depth, radius,
                             static_cast<std::uint32_t>(i)});
        const int tx0 = static_cast<int>(std::max(0.0, x0)) / opts.tile_size;
        const int tx1 = static_cast<int>(std::min<double>(cam.width - 1, x1)) / opts.tile_size;
        const int ty0 = static_cast<int>(std::max(0.0, y0)) / opts.tile_size;
        const int ty1 = static_cast<int>(std::min<double>(cam.height - 1, y1)) / opts.tile_size;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) fs.tile_lists[static_cast<std::size_t>(ty) * fs.tiles_x + tx].push_back(slot);
    }
    auto before = [&](std::uint32_t a, std::uint32_t b) {
        const auto& sa = fs.splats[a];
        const auto& sb = fs.splats[b];
        return sa.depth != sb.depth ? sa.depth < sb.depth : sa.index < sb.index;
    };
    for (auto& list : fs.tile_lists) std::sort(list.begin(), list.end(), before);
    return fs;
}

struct Falloff {
    double alpha = 0.0;
    double d_alpha_d_power = 0.0;
};

/// α = opacity · exp(power) · w(m), m = sqrt(−2·power) the Mahalanobis distance. w is 1 up to
/// cutoff − taper, then a smoothstep down to 0 at the cutoff, so α is continuous in the pose.
inline Falloff falloff(double opacity, double power, double cutoff_sigma, double taper) {
    const double m2 = -2.0 * power;
    if (power > 0.0 || m2 >= cutoff_sigma * cutoff_sigma) return {};
    const double g = opacity * std::exp(power);
    const double inner = cutoff_sigma - taper;
    if (taper <= 0.0 || m2 <= inner * inner) return {g, g};
    const double m = std::sqrt(m2);
    const double t = (cutoff_sigma - m) / taper;
    const double w = t * t * (3.0 - 2.0 * t);
    const double dw_dt = 6.0 * t * (1.0 - t);
    // dt/dpower = (dt/dm)(dm/dpower) = (−1/taper)(−1/m)
    return {g * w, g * w + g * dw_dt / (taper * m)};
}

inline double splat_power(const PreparedSplat& s, double x, double y) {
    const double dx = x - s.mean.x();
    const double dy = y - s.mean.y();
    return -0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) - s.conic_b * dx * dy;
}

/// α of a prepared splat at pixel (x, y); 0 outside the cutoff ellipse.
inline double splat_alpha(const PreparedSplat& s, double x, double y, const RenderOptions& opts) {
    return falloff(s.opacity, splat_power(s, x, y), opts.cutoff_sigma, opts.cutoff_taper).alpha;
}

/// Visits every pixel with its ordered contributor list. Tiles run in parallel; `fn` must only
/// touch state owned by its pixel or its tile:
///   fn(tile_index, x, y, std::span<const Contribution>, double final_transmittance)
template <class PixelFn>
void blend_tiles(const FrameSetup& fs, const CameraModel& cam, const RenderOptions& opts, PixelFn&& fn) {
    parallel_for(fs.tile_lists.size(), opts.threads, [&](std::size_t tile) {
        const int tx = static_cast<int>(tile % fs.tiles_x);
        const int ty = static_cast<int>(tile / fs.tiles_x);
        const auto& list = fs.tile_lists[tile];
        std::vector<Contribution> contribs;
        contribs.reserve(list.size());
        const int x_end = std::min(cam.width, (tx + 1) * fs.tile_size);
        const int y_end = std::min(cam.height, (ty + 1) * fs.tile_size);
        for (int y = ty * fs.tile_size; y < y_end; ++y) {
            for (int x = tx * fs.tile_size; x < x_end; ++x) {
                contribs.clear();
                double T = 1.0;
                for (const std::uint32_t k : list) {
                    const PreparedSplat& sp = fs.splats[k];
                    // Outside the cutoff circle α is exactly 0.
                    if (std::abs(x - sp.mean.x()) > sp.radius || std::abs(y - sp.mean.y()) > sp.radius) continue;
                    const double a = splat_alpha(sp, x, y, opts);
                    if (a <= 0.0) continue;
                    contribs.push_back({k, a, T});
                    T *= (1.0 - a);
                    if (T < opts.transmittance_eps) break;
                }
                fn(tile, x, y, std::span<const Contribution>(contribs), T);
            }
        }
    });
}

/// Composited color of one pixel; the single definition shared by rendering and gradients.
inline Vec3 composite_color(const FrameSetup& fs, std::span<const Contribution> cs, double T, const Vec3& background) {
    Vec3 c = Vec3::Zero();
    for (const auto& ct : cs) c += fs.splats[ct.prepared].color * (ct.alpha * ct.transmittance);
    return c + T * background;
}

inline RenderOutput rasterize(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts = {}) {
    if (cam.width <= 0 || cam.height <= 0) throw ValidationError("camera.size", "image dimensions must be positive");
    if (opts.render_features && scene.feature_dim == 0)
        throw ValidationError("render_features", "scene has no semantic features (d = 0)");
    const FrameSetup fs = prepare_frame(scene, cam, opts);
    RenderOutput out;
    out.color = ImageD(cam.width, cam.height, 3);
    out.alpha = ImageD(cam.width, cam.height, 1);
    out.contributors = Image<int>(cam.width, cam.height, 1);
    const int d = scene.feature_dim;
    if (opts.render_features) out.feature = ImageD(cam.width, cam.height, d);

    blend_tiles(fs, cam, opts, [&](std::size_t, int x, int y, std::span<const Contribution> cs, double T) {
        const Vec3 c = composite_color(fs, cs, T, opts.background);
        for (int k = 0; k < 3; ++k) out.color.at(x, y, k) = c[k];
        out.alpha.at(x, y) = 1.0 - T;
        out.contributors.at(x, y) = static_cast<int>(cs.size());
        if (opts.render_features) {
            double* f = &out.feature.at(x, y, 0);
            for (const auto& ct : cs) {
                const VecX& fi = scene.splats[fs.splats[ct.prepared].index].feature;
                const double w = ct.alpha * ct.transmittance;
                for (int k = 0; k < d; ++k) f[k] += w * fi[k];
            }
        }
    });
    return out;
}

/// Sparse per-pixel blending weights w = α·T, keyed by scene splat index (CSR layout).
struct BlendWeights {
    int width = 0;
    int height = 0;
    std::vector<std::size_t> offsets;  // size width*height + 1
    std::vector<std::uint32_t> splat;
    std::vector<double> weight;
    std::vector<double> alpha;  // accumulated opacity per pixel

    std::size_t pixel(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

inline BlendWeights collect_blend_weights(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts = {}) {
    const FrameSetup fs = prepare_frame(scene, cam, opts);
    const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> per_pixel(npix);
    BlendWeights bw;
    bw.width = cam.width;
    bw.height = cam.height;
    bw.alpha.assign(npix, 0.0);
    blend_tiles(fs, cam, opts, [&](std::size_t, int x, int y, std::span<const Contribution> cs, double T) {
        auto& v = per_pixel[static_cast<std::size_t>(y) * cam.width + x];
        v.reserve(cs.size());
        for (const auto& ct : cs) v.emplace_back(fs.splats[ct.prepared].index, ct.alpha * ct.transmittance);
        bw.alpha[static_cast<std::size_t>(y) * cam.width + x] = 1.0 - T;
    });
    bw.offsets.resize(npix + 1, 0);
    for (std::size_t p = 0; p < npix; ++p) bw.offsets[p + 1] = bw.offsets[p] + per_pixel[p].size();
    bw.splat.reserve(bw.offsets.back());
    bw.weight.reserve(bw.offsets.back());
    for (const auto& v : per_pixel)
        for (const auto& [i, w] : v) {
            bw.splat.push_back(i);
            bw.weight.push_back(w);
        }
    return bw;
}

}  // namespace splatforge
