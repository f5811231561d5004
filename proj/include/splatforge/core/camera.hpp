// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/rigid_transform.hpp"

namespace splatforge {

/// Pinhole camera. Pixel centers sit at integer coordinates; (cx, cy) is in pixel units.
struct CameraModel {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    RigidTransform world_to_camera;

    RigidTransform camera_to_world() const { return world_to_camera.inverse(); }

    /// Camera center in world coordinates.
    Vec3 center() const { return -(world_to_camera.rotation.transpose() * world_to_camera.translation); }

    void validate() const {
        if (!(fx > 0) || !(fy > 0)) throw ValidationError("camera.focal", "fx and fy must be positive");
        if (width <= 0 || height <= 0) throw ValidationError("camera.size", "image dimensions must be positive");
        if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
            throw ValidationError("camera.principal_point", "principal point must lie inside the image");
        if (!world_to_camera.is_valid(1e-6)) throw ValidationError("camera.world_to_camera", "not a rigid transform");
    }

    /// Intrinsics for an image downsampled by 2 with a 2x2 box filter.
    CameraModel half_resolution() const {
        CameraModel c = *this;
        c.fx = fx * 0.5;
        c.fy = fy * 0.5;
        c.cx = std::max(0.0, (cx - 0.5) * 0.5);
        c.cy = std::max(0.0, (cy - 0.5) * 0.5);
        c.width = std::max(1, width / 2);
        c.height = std::max(1, height / 2);
        c.cx = std::min(c.cx, c.width - 1e-9);
        c.cy = std::min(c.cy, c.height - 1e-9);
        return c;
    }

    /// Places the camera at `eye` looking at `target`; image y axis points along -up.
    static CameraModel look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double f, int w, int h) {
        const Vec3 z = (target - eye).normalized();
        const Vec3 x = z.cross(up).normalized();
        const Vec3 y = z.cross(x);
        Mat3 c2w;
        c2w.col(0) = x;
        c2w.col(1) = y;
        c2w.col(2) = z;
        CameraModel cam;
        cam.fx = cam.fy = f;
        cam.width = w;
        cam.height = h;
        cam.cx = (w - 1) * 0.5;
        cam.cy = (h - 1) * 0.5;
        cam.world_to_camera = RigidTransform{c2w, eye}.inverse();
        return cam;
    }
};

inline void to_json(nlohmann::json& j, const CameraModel& c) {
    j = {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height},
         {"world_to_camera", to_json_matrix(c.world_to_camera)}};
}

inline void from_json(const nlohmann::json& j, CameraModel& c) {
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.world_to_camera = j.contains("world_to_camera") ? from_json_matrix(j.at("world_to_camera")) : RigidTransform{};
}

}  // namespace splatforge
