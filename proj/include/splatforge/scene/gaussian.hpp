// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "splatforge/core/error.hpp"
#include "splatforge/core/math.hpp"
#include "splatforge/scene/sh.hpp"

namespace splatforge {

using ShCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// One anisotropic Gaussian primitive.
struct GaussianSplat {
    Vec3 position = Vec3::Zero();
    Quat rotation = Quat::Identity();  // (w, x, y, z); unit after load
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    ShCoeffs sh = ShCoeffs::Zero(1, 3);  // coeff_count(L) rows, RGB columns
    VecX feature;                        // semantic embedding, length d

    double opacity() const { return sigmoid(opacity_logit); }
    Vec3 scale() const { return log_scale.array().exp(); }
    Mat3 rotation_matrix() const { return rotation.normalized().toRotationMatrix(); }
};

/// Σ = R diag(s)² Rᵀ with s = exp(log_scale).
inline Mat3 covariance3d(const GaussianSplat& g) {
    const Mat3 R = g.rotation_matrix();
    const Vec3 s2 = (2.0 * g.log_scale).array().exp();
    return R * s2.asDiagonal() * R.transpose();
}

struct GaussianScene {
    std::vector<GaussianSplat> splats;
    int sh_degree = 0;
    int feature_dim = 0;
    std::map<std::string, VecX> label_table;

    std::size_t size() const { return splats.size(); }

    /// Checks the per-splat and scene-level invariants.
    void validate() const {
        if (sh_degree < 0 || sh_degree > 3) throw ValidationError("sh_degree", "must be in [0, 3]");
        if (feature_dim < 0) throw ValidationError("feature_dim", "must be non-negative");
        const int k = sh::coeff_count(sh_degree);
        for (std::size_t i = 0; i < splats.size(); ++i) {
            const auto& g = splats[i];
            const std::string at = "splat[" + std::to_string(i) + "]";
            if (g.sh.rows() != k) throw ValidationError(at + ".sh", "coefficient count does not match sh_degree");
            if (g.feature.size() != feature_dim) throw ValidationError(at + ".feature", "length does not match feature_dim");
            if (!g.position.allFinite() || !g.log_scale.allFinite() || !std::isfinite(g.opacity_logit) ||
                !g.sh.allFinite() || !g.feature.allFinite() || !g.rotation.coeffs().allFinite())
                throw ValidationError(at, "non-finite value");
            if (g.rotation.norm() < 1e-12) throw ValidationError(at + ".rotation", "zero quaternion");
            if (!g.scale().allFinite() || (g.scale().array() <= 0).any())
                throw ValidationError(at + ".log_scale", "scale must be finite and positive");
        }
        for (const auto& [name, e] : label_table) {
            if (e.size() != feature_dim)
                throw ValidationError("label_table." + name, "embedding length does not match feature_dim");
            if (std::abs(e.norm() - 1.0) > 1e-6) throw ValidationError("label_table." + name, "embedding must be unit norm");
        }
    }
};

/// Bitwise comparison of every stored field (distinguishes -0.0 from 0.0).
inline bool bitwise_equal(const GaussianSplat& a, const GaussianSplat& b) {
    auto same = [](const double* x, const double* y, Eigen::Index n) {
        return std::memcmp(x, y, static_cast<std::size_t>(n) * sizeof(double)) == 0;
    };
    return same(a.position.data(), b.position.data(), 3) && same(a.rotation.coeffs().data(), b.rotation.coeffs().data(), 4) &&
           same(a.log_scale.data(), b.log_scale.data(), 3) && same(&a.opacity_logit, &b.opacity_logit, 1) &&
           a.sh.rows() == b.sh.rows() && same(a.sh.data(), b.sh.data(), a.sh.size()) &&
           a.feature.size() == b.feature.size() && same(a.feature.data(), b.feature.data(), a.feature.size());
}

inline bool bitwise_equal(const GaussianScene& a, const GaussianScene& b) {
    if (a.sh_degree != b.sh_degree || a.feature_dim != b.feature_dim || a.splats.size() != b.splats.size()) return false;
    for (std::size_t i = 0; i < a.splats.size(); ++i)
        if (!bitwise_equal(a.splats[i], b.splats[i])) return false;
    if (a.label_table.size() != b.label_table.size()) return false;
    for (auto ia = a.label_table.begin(), ib = b.label_table.begin(); ia != a.label_table.end(); ++ia, ++ib)
        if (ia->first != ib->first || ia->second.size() != ib->second.size() || ia->second != ib->second) return false;
    return true;
}

}  // namespace splatforge
