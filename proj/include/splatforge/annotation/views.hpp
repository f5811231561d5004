// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Flat-shaded orthographic snapshots of a mesh, used as the visual context for annotation.
//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "splatforge/assets/mesh.hpp"
#include "splatforge/core/image.hpp"

namespace splatforge {

struct OrthoView {
    std::string name;  // "+x", "-x", "+y", "+z": the side the viewer stands on
    ImageD image;      // H×W×3, white background
    Mask mask;         // 1 where the mesh covers the pixel center
};

inline constexpr double kOrthoViewMargin = 0.1;

namespace detail {

struct ViewBasis {
    const char* name;
    Vec3 forward;  // viewing direction (from the viewer into the scene)
    Vec3 up;
};

inline const std::array<ViewBasis, 4>& ortho_view_bases() {
    static const std::array<ViewBasis, 4> b{{{"+x", -Vec3::UnitX(), Vec3::UnitZ()},
                                             {"-x", Vec3::UnitX(), Vec3::UnitZ()},
                                             {"+y", -Vec3::UnitY(), Vec3::UnitZ()},
                                             {"+z", -Vec3::UnitZ(), Vec3::UnitY()}}};
    return b;
}

}  // namespace detail

/// Renders the mesh from +x, −x, +y and +z. Each view is square, centered on the bounding box,
/// and spans the larger projected box extent plus kOrthoViewMargin of it on each side. Faces
/// are shaded by |n · view| with a z-buffer; coverage is tested at pixel centers.
inline std::array<OrthoView, 4> render_orthographic_views(const TriangleMesh& mesh, int resolution) {
    if (mesh.faces.empty()) throw ValidationError("mesh", "cannot render an empty mesh");
    if (resolution <= 0) throw ValidationError("resolution", "must be positive");
    const auto [lo, hi] = mesh.bounds();
    const Vec3 center = 0.5 * (lo + hi);
    const Vec3 half = 0.5 * (hi - lo);

    std::array<OrthoView, 4> out;
    for (std::size_t v = 0; v < 4; ++v) {
        const auto& b = detail::ortho_view_bases()[v];
        const Vec3 right = b.forward.cross(b.up);
        const double extent = std::max({std::abs(right.dot(half)), std::abs(b.up.dot(half)), 1e-9});
        const double window = extent * (1.0 + kOrthoViewMargin);  // half-width in metres
        const double px = 2.0 * window / resolution;

        OrthoView& ov = out[v];
        ov.name = b.name;
        ov.image = ImageD(resolution, resolution, 3, 1.0);
        ov.mask = Mask(resolution, resolution, 1, 0);
        std::vector<double> depth(static_cast<std::size_t>(resolution) * resolution, std::numeric_limits<double>::infinity());

        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const Vec3 na = mesh.face_normal_area(f);
            const double area2 = na.norm();
            if (!(area2 > 0)) continue;
            const double shade = 0.2 + 0.7 * std::abs(na.dot(b.forward)) / area2;
            Vec2 s[3];
            double d[3];
            for (int k = 0; k < 3; ++k) {
                const Vec3 p = mesh.vertices[mesh.faces[f][k]] - center;
                // Image x grows with `right`, image y grows downward (against `up`).
                s[k] = Vec2((right.dot(p) + window) / px, (window - b.up.dot(p)) / px);
                d[k] = b.forward.dot(p);
            }
            const double area = (s[1] - s[0]).x() * (s[2] - s[0]).y() - (s[1] - s[0]).y() * (s[2] - s[0]).x();
            if (area == 0.0) continue;  // edge-on
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min({s[0].x(), s[1].x(), s[2].x()}))));
            const int x1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({s[0].x(), s[1].x(), s[2].x()}))));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min({s[0].y(), s[1].y(), s[2].y()}))));
            const int y1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({s[0].y(), s[1].y(), s[2].y()}))));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const Vec2 c(x + 0.5, y + 0.5);
                    double w[3];
                    for (int k = 0; k < 3; ++k) {
                        const Vec2& a = s[(k + 1) % 3];
                        const Vec2& e = s[(k + 2) % 3];
                        w[k] = ((e - a).x() * (c - a).y() - (e - a).y() * (c - a).x()) / area;
                    }
                    if (w[0] < 0 || w[1] < 0 || w[2] < 0) continue;
                    const double z = w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
                    double& zb = depth[static_cast<std::size_t>(y) * resolution + x];
                    if (!(z < zb)) continue;
                    zb = z;
                    ov.mask.at(x, y) = 1;
                    for (int ch = 0; ch < 3; ++ch) ov.image.at(x, y, ch) = shade;
                }
        }
    }
    return out;
}

}  // namespace splatforge
