// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/math.hpp"

namespace splatforge {

struct PhysicsProperties {
    double density = 0.0;         // kg/m³
    double youngs_modulus = 0.0;  // Pa
    double poisson_ratio = 0.0;

    void validate() const {
        if (!(density > 0) || !std::isfinite(density)) throw ValidationError("density", "must be > 0, got " + std::to_string(density));
        if (!(youngs_modulus > 0) || !std::isfinite(youngs_modulus))
            throw ValidationError("youngs_modulus", "must be > 0, got " + std::to_string(youngs_modulus));
        if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
            throw ValidationError("poisson_ratio", "must be in range (-1, 0.5), got " + std::to_string(poisson_ratio));
    }

    bool operator==(const PhysicsProperties&) const = default;
};

inline nlohmann::json to_json_value(const PhysicsProperties& p) {
    return {{"density", p.density}, {"youngs_modulus", p.youngs_modulus}, {"poisson_ratio", p.poisson_ratio}};
}

enum class ArticulationType { none, prismatic, revolute };

inline const char* to_string(ArticulationType t) {
    switch (t) {
        case ArticulationType::none: return "none";
        case ArticulationType::prismatic: return "prismatic";
        case ArticulationType::revolute: return "revolute";
    }
    return "?";
}

/// Parses "none" / "prismatic" / "revolute"; anything else is an error naming the value.
inline ArticulationType parse_articulation_type(const std::string& s) {
    if (s == "none") return ArticulationType::none;
    if (s == "prismatic") return ArticulationType::prismatic;
    if (s == "revolute") return ArticulationType::revolute;
    throw ValidationError("joint_type", "unknown joint type '" + s + "'");
}

struct ArticulationProposal {
    std::string category;
    ArticulationType joint_type = ArticulationType::none;
    std::optional<std::pair<std::string, std::string>> part_labels;  // (mobile, base)

    void validate() const {
        if (joint_type == ArticulationType::none && part_labels)
            throw ValidationError("parts", "an unarticulated proposal must not name parts");
        if (joint_type != ArticulationType::none) {
            if (!part_labels) throw ValidationError("parts", "an articulated proposal needs (mobile, base) part labels");
            if (part_labels->first.empty() || part_labels->second.empty())
                throw ValidationError("parts", "part labels must be non-empty");
            if (part_labels->first == part_labels->second) throw ValidationError("parts", "mobile and base labels must differ");
        }
    }

    bool operator==(const ArticulationProposal&) const = default;
};

struct ArticulationSpec {
    ArticulationType joint_type = ArticulationType::prismatic;  // never none
    Vec3 axis = Vec3::UnitX();
    Vec3 origin = Vec3::Zero();
    double limit_lower = 0.0;
    double limit_upper = 0.0;
    std::string mobile_label;
    std::string base_label;

    void validate() const {
        if (joint_type == ArticulationType::none) throw ValidationError("joint_type", "articulation spec needs a joint type");
        if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-6) throw ValidationError("axis", "axis must be unit length");
        if (!origin.allFinite()) throw ValidationError("origin", "non-finite origin");
        if (!std::isfinite(limit_lower) || !std::isfinite(limit_upper)) throw ValidationError("limits", "non-finite limit");
        if (!(limit_lower <= limit_upper)) throw ValidationError("limits", "limit order: lower exceeds upper");
        if (mobile_label.empty() || base_label.empty()) throw ValidationError("parts", "part labels must be non-empty");
    }
};

inline nlohmann::json to_json_value(const ArticulationSpec& a) {
    return {{"joint_type", to_string(a.joint_type)},
            {"axis", {a.axis.x(), a.axis.y(), a.axis.z()}},
            {"origin", {a.origin.x(), a.origin.y(), a.origin.z()}},
            {"limit_lower", a.limit_lower},
            {"limit_upper", a.limit_upper},
            {"mobile_label", a.mobile_label},
            {"base_label", a.base_label}};
}

}  // namespace splatforge
