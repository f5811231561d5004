// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Volume, center of mass and inertia of a closed triangle mesh from signed tetrahedra
// (origin, a, b, c) summed over faces. For a tetrahedron spanned from the origin,
//   ∫ x xᵀ dV = det/120 · (a aᵀ + b bᵀ + c cᵀ + s sᵀ),  s = a + b + c.
//
#pragma once

#include <cmath>

#include "splatforge/assets/mesh.hpp"

namespace splatforge {

struct MassProperties {
    double volume = 0.0;
    double mass = 0.0;
    Vec3 center_of_mass = Vec3::Zero();
    Mat3 inertia = Mat3::Zero();  // about the center of mass

    void validate() const {
        if (!(volume > 0) || !(mass > 0)) throw ValidationError("mass", "volume and mass must be positive");
        if (!center_of_mass.allFinite() || !inertia.allFinite()) throw ValidationError("inertia", "non-finite mass properties");
    }
};

inline MassProperties mass_properties(const TriangleMesh& mesh, double density) {
    if (!(density > 0) || !std::isfinite(density)) throw ValidationError("density", "must be positive and finite");
    mesh.validate();
    if (!is_watertight(mesh)) throw ValidationError("mesh", "mesh is not watertight");

    // Integrate about the vertex mean to limit cancellation for meshes far from the origin.
    Vec3 ref = Vec3::Zero();
    for (const auto& v : mesh.vertices) ref += v;
    ref /= static_cast<double>(mesh.vertices.size());

    double vol6 = 0.0;  // 6 × volume
    Vec3 first = Vec3::Zero();
    Mat3 second = Mat3::Zero();
    for (const auto& f : mesh.faces) {
        const Vec3 a = mesh.vertices[f[0]] - ref, b = mesh.vertices[f[1]] - ref, c = mesh.vertices[f[2]] - ref;
        const double det = a.dot(b.cross(c));
        const Vec3 s = a + b + c;
        vol6 += det;
        first += det * s;  // 24 × ∫ x dV contribution
        second += det * (a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose());
    }
    double volume = vol6 / 6.0;
    Vec3 moment = first / 24.0;
    Mat3 cov = second / 120.0;
    if (volume < 0) {
        log::warn("mass_properties: mesh is inside out, flipping orientation", {{"volume", volume}});
        volume = -volume;
        moment = -moment;
        cov = -cov;
    }
    if (!(volume > 0)) throw ValidationError("mesh", "mesh encloses zero volume");

    MassProperties mp;
    mp.volume = volume;
    mp.mass = density * volume;
    const Vec3 com_local = moment / volume;
    mp.center_of_mass = ref + com_local;
    const Mat3 cov_com = density * (cov - volume * com_local * com_local.transpose());
    mp.inertia = cov_com.trace() * Mat3::Identity() - cov_com;
    mp.inertia = 0.5 * (mp.inertia + mp.inertia.transpose());
    return mp;
}

/// Solid box filling the mesh's bounding box; stand-in for parts that are not closed.
inline MassProperties bounding_box_mass_properties(const TriangleMesh& mesh, double density) {
    const auto [lo, hi] = mesh.bounds();
    const Vec3 e = hi - lo;
    MassProperties mp;
    mp.volume = e.x() * e.y() * e.z();
    mp.mass = density * mp.volume;
    mp.center_of_mass = 0.5 * (lo + hi);
    mp.inertia = (mp.mass / 12.0) * Vec3(e.y() * e.y() + e.z() * e.z(), e.x() * e.x() + e.z() * e.z(),
                                         e.x() * e.x() + e.y() * e.y()).asDiagonal();
    return mp;
}

/// mass_properties for closed meshes, otherwise the bounding-box estimate with a warning.
inline MassProperties mass_properties_or_bounding_box(const TriangleMesh& mesh, double density, const std::string& name = {}) {
    if (is_watertight(mesh)) return mass_properties(mesh, density);
    log::warn("part is not watertight, using bounding-box mass", {{"part", name}});
    auto mp = bounding_box_mass_properties(mesh, density);
    if (!(mp.volume > 0)) throw ValidationError("mesh", "part '" + name + "' has a flat bounding box");
    return mp;
}

}  // namespace splatforge
