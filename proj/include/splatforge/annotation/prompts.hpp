// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Versioned prompt templates. Placeholders are written {{name}}; every placeholder must be bound
// when a template is rendered. Changing any template text requires bumping its version.
//
#pragma once

#include <map>
#include <string>
#include <string_view>

#include "splatforge/core/error.hpp"

namespace splatforge {

struct PromptTemplate {
    std::string_view id;
    int version;
    std::string_view system;
    std::string_view user;
};

inline constexpr PromptTemplate kArticulationPrompt{
    "articulation", 1,
    R"(You are an expert in articulated household objects. You will be shown four orthographic renders of one 3D asset, viewed from the +x, -x, +y and +z sides of its canonical (mesh) frame. Respond with JSON only: a single JSON object and no other text.)",
    R"(Asset identifier: {{asset_name}}
Available part labels: {{part_labels}}

Identify the object's category and propose its articulation.
Return exactly these keys:
  "category": short lowercase noun phrase,
  "joint_type": one of "prismatic", "revolute", "none",
  "parts": [mobile part label, base part label] chosen from the available part labels, or [] when joint_type is "none".)"};

inline constexpr PromptTemplate kJointParametersPrompt{
    "joint_parameters", 1,
    R"(You are an expert in articulated household objects. You will be shown four orthographic renders of one 3D asset, viewed from the +x, -x, +y and +z sides of its canonical (mesh) frame. All coordinates are metres in that frame. Respond with JSON only: a single JSON object and no other text.)",
    R"(Asset category: {{category}}
Joint type: {{joint_type}}
Mobile part "{{mobile_label}}" bounding box: min {{mobile_min}}, max {{mobile_max}}
Base part "{{base_label}}" bounding box: min {{base_min}}, max {{base_max}}

Determine the joint that moves the mobile part relative to the base part.
Return exactly these keys:
  "axis": [x, y, z] joint axis direction,
  "origin": [x, y, z] a point on the joint axis,
  "limit_lower": lower motion limit ({{limit_unit}}),
  "limit_upper": upper motion limit ({{limit_unit}}).)"};

inline constexpr PromptTemplate kPhysicsPrompt{
    "physics", 1,
    R"(You are a physics expert who estimates material properties of everyday objects. You will be shown four orthographic renders of one 3D asset. Respond with JSON only: a single JSON object and no other text.)",
    R"(Asset category: {{category}}

Estimate the object's bulk material properties.
Return exactly these keys:
  "density": kg/m^3,
  "youngs_modulus": Pa,
  "poisson_ratio": dimensionless, strictly between -1 and 0.5.)"};

/// Substitutes every {{name}} in `text` from `vars`; unknown or unbound placeholders are errors.
inline std::string render_prompt(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = text.find("}}", open + 2);
        if (close == std::string_view::npos) throw ValidationError("prompt", "unterminated placeholder");
        const std::string key(text.substr(open + 2, close - open - 2));
        const auto it = vars.find(key);
        if (it == vars.end()) throw ValidationError("prompt", "unbound placeholder '" + key + "'");
        out.append(text.substr(pos, open - pos));
        out.append(it->second);
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

}  // namespace splatforge
