// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Randomizers for object placement, camera pose, scene lighting and trajectory via-points.
// Every sampler is a pure function of its config and the Philox stream it is handed.
//
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "splatforge/core/camera.hpp"
#include "splatforge/core/json_fields.hpp"
#include "splatforge/core/random.hpp"
#include "splatforge/core/rigid_transform.hpp"
#include "splatforge/scene/gaussian.hpp"

namespace splatforge {

using Range = std::array<double, 2>;  // [lo, hi]

struct ObjectAugmentConfig {
    Range radius_range{0.28, 0.35};  // m, annulus around the robot base (world origin)
    Range sector_range{-std::numbers::pi / 2, std::numbers::pi / 2};  // polar angle of the position, rad
    Range yaw_range{0.0, 2 * std::numbers::pi};
    Range scale_range{0.9, 1.1};
    double support_height = 0.0;  // m, z of the placement frame
};

struct CameraAugmentConfig {
    double translation_sigma = 0.01;                      // m, per axis
    double rotation_sigma = 2.0 * std::numbers::pi / 180;  // rad, per axis
    double truncation = 3.0;                              // in standard deviations
};

struct LightingAugmentConfig {
    Range color_scale_range{0.8, 1.2};
    Range color_offset_range{-0.05, 0.05};
    double noise_sigma = 0.01;
};

struct TrajectoryAugmentConfig {
    Vec3 via_offset_min = Vec3::Constant(-0.03);
    Vec3 via_offset_max = Vec3::Constant(0.03);
};

struct AugmentationConfig {
    ObjectAugmentConfig object;
    CameraAugmentConfig camera;
    LightingAugmentConfig lighting;
    TrajectoryAugmentConfig trajectory;
    std::uint64_t base_seed = 0;

    void validate() const {
        auto ordered = [](const Range& r, const char* name) {
            if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || r[0] > r[1])
                throw ConfigError(std::string("augmentation.") + name + ": range must be finite and ordered");
        };
        ordered(object.radius_range, "object.radius_range");
        ordered(object.sector_range, "object.sector_range");
        ordered(object.yaw_range, "object.yaw_range");
        ordered(object.scale_range, "object.scale_range");
        ordered(lighting.color_scale_range, "lighting.color_scale_range");
        ordered(lighting.color_offset_range, "lighting.color_offset_range");
        if (!(object.radius_range[0] > 0)) throw ConfigError("augmentation.object.radius_range: r_min must be > 0");
        if (!(object.scale_range[0] > 0)) throw ConfigError("augmentation.object.scale_range: scale must be > 0");
        if (!(camera.translation_sigma >= 0) || !(camera.rotation_sigma >= 0) || !(lighting.noise_sigma >= 0))
            throw ConfigError("augmentation: sigmas must be >= 0");
        if (!(camera.truncation > 0)) throw ConfigError("augmentation.camera.truncation: must be > 0");
        for (int k = 0; k < 3; ++k)
            if (!(trajectory.via_offset_min[k] <= trajectory.via_offset_max[k]))
                throw ConfigError("augmentation.trajectory: via_offset_min must not exceed via_offset_max");
    }
};

inline void to_json(nlohmann::json& j, const AugmentationConfig& c) {
    auto v3 = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    j = {{"object",
          {{"radius_range", c.object.radius_range},
           {"sector_range", c.object.sector_range},
           {"yaw_range", c.object.yaw_range},
           {"scale_range", c.object.scale_range},
           {"support_height", c.object.support_height}}},
         {"camera",
          {{"translation_sigma", c.camera.translation_sigma},
           {"rotation_sigma", c.camera.rotation_sigma},
           {"truncation", c.camera.truncation}}},
         {"lighting",
          {{"color_scale_range", c.lighting.color_scale_range},
           {"color_offset_range", c.lighting.color_offset_range},
           {"noise_sigma", c.lighting.noise_sigma}}},
         {"trajectory", {{"via_offset_min", v3(c.trajectory.via_offset_min)}, {"via_offset_max", v3(c.trajectory.via_offset_max)}}},
         {"base_seed", c.base_seed}};
}

inline AugmentationConfig augmentation_config_from_json(const nlohmann::json& j, const std::string& path = "augmentation") {
    AugmentationConfig c;
    JsonFields f(j, path);
    if (const auto* o = f.child("object")) {
        JsonFields g(*o, f.child_path("object"));
        g.get("radius_range", c.object.radius_range).get("sector_range", c.object.sector_range);
        g.get("yaw_range", c.object.yaw_range).get("scale_range", c.object.scale_range);
        g.get("support_height", c.object.support_height).finish();
    }
    if (const auto* o = f.child("camera")) {
        JsonFields g(*o, f.child_path("camera"));
        g.get("translation_sigma", c.camera.translation_sigma).get("rotation_sigma", c.camera.rotation_sigma);
        g.get("truncation", c.camera.truncation).finish();
    }
    if (const auto* o = f.child("lighting")) {
        JsonFields g(*o, f.child_path("lighting"));
        g.get("color_scale_range", c.lighting.color_scale_range).get("color_offset_range", c.lighting.color_offset_range);
        g.get("noise_sigma", c.lighting.noise_sigma).finish();
    }
    if (const auto* o = f.child("trajectory")) {
        JsonFields g(*o, f.child_path("trajectory"));
        g.get("via_offset_min", c.trajectory.via_offset_min).get("via_offset_max", c.trajectory.via_offset_max).finish();
    }
    f.get("base_seed", c.base_seed);
    f.finish();
    c.validate();
    return c;
}

struct ObjectPlacement {
    RigidTransform pose;  // yaw about +z, position on the support plane
    double uniform_scale = 1.0;
    double radius = 0.0;  // planar distance from the robot base
    double yaw = 0.0;
};

inline nlohmann::json to_json_value(const ObjectPlacement& p) {
    return {{"pose", to_json_matrix(p.pose)}, {"uniform_scale", p.uniform_scale}, {"radius", p.radius}, {"yaw", p.yaw}};
}

/// Area-uniform position in the annular sector (r = sqrt(U·(r_max² − r_min²) + r_min²)),
/// uniform yaw and uniform scale.
inline ObjectPlacement sample_object_placement(const ObjectAugmentConfig& cfg, Philox& rng) {
    const double r0 = cfg.radius_range[0], r1 = cfg.radius_range[1];
    ObjectPlacement p;
    p.radius = std::sqrt(rng.uniform01() * (r1 * r1 - r0 * r0) + r0 * r0);
    p.radius = std::clamp(p.radius, r0, r1);  // guards the last ulp of sqrt
    const double theta = rng.uniform(cfg.sector_range[0], cfg.sector_range[1]);
    p.yaw = rng.uniform(cfg.yaw_range[0], cfg.yaw_range[1]);
    p.uniform_scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
    p.pose.rotation = so3_exp(Vec3(0, 0, p.yaw));
    p.pose.translation = Vec3(p.radius * std::cos(theta), p.radius * std::sin(theta), cfg.support_height);
    return p;
}

/// δ ∘ W with δ = (exp(ω), t): per-axis truncated normals for ω and t, applied in the camera
/// frame. Zero sigmas return the base camera unchanged.
inline CameraModel perturb_camera(const CameraModel& base, const CameraAugmentConfig& cfg, Philox& rng) {
    if (cfg.translation_sigma == 0.0 && cfg.rotation_sigma == 0.0) return base;
    Vec3 t, w;
    for (int k = 0; k < 3; ++k) t[k] = rng.truncated_normal(0.0, cfg.translation_sigma, cfg.truncation);
    for (int k = 0; k < 3; ++k) w[k] = rng.truncated_normal(0.0, cfg.rotation_sigma, cfg.truncation);
    CameraModel out = base;
    out.world_to_camera = compose(RigidTransform{so3_exp(w), t}, base.world_to_camera);
    return out;
}

struct LightingDraw {
    double scale = 1.0;
    double offset = 0.0;
};

/// c₀ ← s·c₀ + b on every degree-0 SH coefficient (one s, b for the whole scene), then
/// independent N(0, σ_n²) noise per splat and channel. Higher SH bands, geometry and features
/// are untouched.
inline GaussianScene augment_lighting(const GaussianScene& scene, const LightingAugmentConfig& cfg, Philox& rng,
                                      LightingDraw* drawn = nullptr) {
    LightingDraw d{rng.uniform(cfg.color_scale_range[0], cfg.color_scale_range[1]),
                   rng.uniform(cfg.color_offset_range[0], cfg.color_offset_range[1])};
    if (drawn) *drawn = d;
    GaussianScene out = scene;
    const bool affine = d.scale != 1.0 || d.offset != 0.0;
    for (auto& g : out.splats)
        for (int k = 0; k < 3; ++k) {
            double& c = g.sh(0, k);
            if (affine) c = d.scale * c + d.offset;
            if (cfg.noise_sigma > 0) c += rng.normal(0.0, cfg.noise_sigma);
        }
    return out;
}

/// Goal translation plus a uniform offset from the via box; orientation is the goal's.
inline RigidTransform sample_via_point(const RigidTransform& goal, const TrajectoryAugmentConfig& cfg, Philox& rng) {
    RigidTransform via = goal;
    for (int k = 0; k < 3; ++k) via.translation[k] += rng.uniform(cfg.via_offset_min[k], cfg.via_offset_max[k]);
    return via;
}

}  // namespace splatforge
