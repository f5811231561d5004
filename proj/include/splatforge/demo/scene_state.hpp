// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Kinematic state of a manipulation scene: placed interactive assets (pose, scale, joint value)
// on top of a static splat background, plus splat proxies used to render assets and the robot.
//
#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <map>
#include <string>
#include <vector>

#include "splatforge/augment/augmentation.hpp"
#include "splatforge/assets/interactive_asset.hpp"
#include "splatforge/kinematics/robot_model.hpp"
#include "splatforge/scene/gaussian.hpp"
#include "splatforge/scene/sh.hpp"

namespace splatforge {

/// The placement overlaps an object that is already in the scene; resample and retry.
class PlacementRejected : public Error {
  public:
    using Error::Error;
};

/// Asset meshes and articulation uniformly scaled by s. Density is kept, so mass scales by s³.
inline InteractiveAsset scale_asset(const InteractiveAsset& asset, double s) {
    if (!(s > 0)) throw ValidationError("uniform_scale", "must be > 0");
    std::map<std::string, TriangleMesh> parts;
    for (const auto& [label, m] : asset.parts) parts[label] = scaled(m, s);
    std::optional<ArticulationSpec> art = asset.articulation;
    if (art) {
        art->origin *= s;
        if (art->joint_type == ArticulationType::prismatic) {
            art->limit_lower *= s;
            art->limit_upper *= s;
        }
    }
    return make_interactive_asset(std::move(parts), asset.physics, art);
}

/// Object-frame motion of the mobile part at joint value q.
inline RigidTransform articulation_motion(const ArticulationSpec& a, double q) {
    if (a.joint_type == ArticulationType::prismatic) return RigidTransform::from_translation(a.axis * q);
    const Mat3 R = so3_exp(a.axis * q);
    return {R, a.origin - R * a.origin};
}

inline Bounds transform_bounds(const Bounds& b, const RigidTransform& T) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (int c = 0; c < 8; ++c) {
        const Vec3 p((c & 1) ? b.second.x() : b.first.x(), (c & 2) ? b.second.y() : b.first.y(),
                     (c & 4) ? b.second.z() : b.first.z());
        const Vec3 q = T.apply(p);
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    return {lo, hi};
}

inline bool bounds_overlap(const Bounds& a, const Bounds& b) {
    return (a.first.array() < b.second.array()).all() && (b.first.array() < a.second.array()).all();
}

struct SceneObject {
    std::string name;   // instance name, also the asset key
    InteractiveAsset asset;  // already scaled
    double scale = 1.0;
    RigidTransform pose;  // object frame → world
    double joint = 0.0;   // articulation value; 0 for rigid assets

    /// Pose of one part (object frame → world) at the current joint value.
    RigidTransform part_pose(const std::string& label) const {
        if (asset.articulation && label == asset.articulation->mobile_label)
            return compose(pose, articulation_motion(*asset.articulation, joint));
        return pose;
    }

    /// World-space AABB of the current geometry.
    Bounds world_bounds() const {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
        for (const auto& [label, m] : asset.parts) {
            const auto b = transform_bounds(m.bounds(), part_pose(label));
            lo = lo.cwiseMin(b.first);
            hi = hi.cwiseMax(b.second);
        }
        return {lo, hi};
    }

    /// Center of the object-frame AABB of the whole object, in world coordinates.
    Vec3 center() const {
        const auto b = world_bounds();
        return 0.5 * (b.first + b.second);
    }

    double mass() const {
        double m = 0;
        for (const auto& [label, mp] : asset.mass) m += mp.mass;
        return m;
    }

    Vec3 center_of_mass() const {
        Vec3 c = Vec3::Zero();
        for (const auto& [label, mp] : asset.mass) c += mp.mass * part_pose(label).apply(mp.center_of_mass);
        return c / mass();
    }
};

struct SceneState {
    std::vector<SceneObject> objects;  // in placement order

    SceneObject& object(const std::string& name) {
        for (auto& o : objects)
            if (o.name == name) return o;
        throw ValidationError("object", "no object '" + name + "' in the scene");
    }
    const SceneObject& object(const std::string& name) const { return const_cast<SceneState&>(*this).object(name); }
};

/// Places `asset` at the sampled pose and scale. Throws PlacementRejected when the posed
/// bounding box overlaps an object already in the scene.
inline SceneObject& attach_object(SceneState& state, const std::string& name, const InteractiveAsset& asset,
                                  const ObjectPlacement& placement, double joint = 0.0) {
    for (const auto& o : state.objects)
        if (o.name == name) throw ValidationError("object", "object '" + name + "' is already placed");
    SceneObject obj;
    obj.name = name;
    obj.asset = scale_asset(asset, placement.uniform_scale);
    obj.scale = placement.uniform_scale;
    obj.pose = placement.pose;
    obj.joint = joint;
    if (obj.asset.articulation &&
        (joint < obj.asset.articulation->limit_lower - 1e-9 || joint > obj.asset.articulation->limit_upper + 1e-9))
        throw ValidationError("joint", "initial joint value outside the articulation limits");
    const Bounds b = obj.world_bounds();
    for (const auto& o : state.objects)
        if (bounds_overlap(b, o.world_bounds()))
            throw PlacementRejected("placement of '" + name + "' overlaps '" + o.name + "'");
    state.objects.push_back(std::move(obj));
    return state.objects.back();
}

// ---- splat proxies ---------------------------------------------------------------------------

/// Degree-0 SH coefficient that renders as `rgb`.
inline Vec3 rgb_to_sh0(const Vec3& rgb) { return (rgb.array() - 0.5) / sh::kC0; }

/// Small isotropic splats spread over the surface of `mesh` (systematic area sampling, about
/// `per_m2` splats per square metre, at least `min_count`). Positions stay in the mesh frame.
inline std::vector<GaussianSplat> surface_splats(const TriangleMesh& mesh, const Vec3& rgb, double per_m2,
                                                 std::size_t min_count, int sh_degree, std::uint64_t seed) {
    std::vector<GaussianSplat> out;
    if (mesh.faces.empty()) return out;
    const double area = mesh.surface_area();
    const auto n = std::max<std::size_t>(min_count, static_cast<std::size_t>(std::ceil(area * per_m2)));
    std::vector<double> cdf(mesh.faces.size());
    double total = 0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) cdf[f] = (total += mesh.face_area(f));
    if (!(total > 0)) return out;
    Philox rng = Philox::stream(seed, "surface-splats");
    const double offset = rng.uniform01();
    const double sigma = 0.6 * std::sqrt(area / static_cast<double>(n));
    const Vec3 c0 = rgb_to_sh0(rgb);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + offset) / static_cast<double>(n) * total;
        const auto f = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
        const auto& tri = mesh.faces[f];
        const double r1 = std::sqrt(rng.uniform01()), r2 = rng.uniform01();
        GaussianSplat g;
        g.position = (1 - r1) * mesh.vertices[tri[0]] + r1 * (1 - r2) * mesh.vertices[tri[1]] + r1 * r2 * mesh.vertices[tri[2]];
        g.log_scale = Vec3::Constant(std::log(sigma));
        g.opacity_logit = 3.0;
        g.sh = ShCoeffs::Zero(sh::coeff_count(sh_degree), 3);
        g.sh.row(0) = c0.transpose();
        out.push_back(std::move(g));
    }
    return out;
}

/// Splats attached to a rigid frame (an object part or a robot link).
struct SplatGroup {
    std::string object;  // scene object name, or empty for a robot link
    std::string part;    // part label or link name
    std::vector<GaussianSplat> splats;  // in the group's frame
};

/// Appends `src` moved by T to `dst` (position and orientation; the proxies carry no
/// view-dependent SH, so higher bands need no rotation).
inline void append_posed(std::vector<GaussianSplat>& dst, const std::vector<GaussianSplat>& src, const RigidTransform& T) {
    const Quat q(T.rotation);
    for (const auto& g : src) {
        GaussianSplat h = g;
        h.position = T.apply(g.position);
        h.rotation = q * g.rotation;
        dst.push_back(std::move(h));
    }
}

}  // namespace splatforge
