// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatforge/core/log.hpp"
#include "splatforge/core/rigid_transform.hpp"
#include "splatforge/scene/gaussian.hpp"

namespace splatforge {

/// How SH bands of degree >= 2 are handled when a scene is rotated.
enum class HighOrderShPolicy {
    truncate_to_degree1,  // drop bands >= 2; the scene becomes degree 1
    keep_unrotated,       // keep bands >= 2 as stored (view dependence becomes slightly wrong)
};

/// Maps every splat by T: positions and orientations are transformed, SH degree 1 is rotated
/// exactly, degree 0 is invariant.
inline GaussianScene transform_scene(const GaussianScene& scene, const RigidTransform& T,
                                     HighOrderShPolicy policy = HighOrderShPolicy::truncate_to_degree1) {
    GaussianScene out = scene;
    const bool pure_translation = T.rotation == Mat3::Identity();
    const Quat qT(T.rotation);
    const bool truncate = !pure_translation && scene.sh_degree >= 2 && policy == HighOrderShPolicy::truncate_to_degree1;
    if (!pure_translation && scene.sh_degree >= 2 && policy == HighOrderShPolicy::keep_unrotated)
        log::warn("transform_scene: SH bands of degree >= 2 left unrotated", {{"sh_degree", scene.sh_degree}});
    if (truncate) out.sh_degree = 1;

    for (auto& g : out.splats) {
        g.position = T.apply(g.position);
        if (pure_translation) continue;
        g.rotation = qT * g.rotation;
        // q and −q are the same rotation; a fixed sign keeps composition fieldwise consistent.
        if (g.rotation.w() < 0) g.rotation.coeffs() = -g.rotation.coeffs();
        if (scene.sh_degree >= 1) {
            const Mat3 v = sh::degree1_as_vectors(g.sh);
            sh::set_degree1_from_vectors(g.sh, T.rotation * v);
        }
        if (truncate) g.sh.conservativeResize(sh::coeff_count(1), 3);
    }
    return out;
}

}  // namespace splatforge
