// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Articulation inference, joint-parameter inference and physics estimation. Replies must be a
// single JSON object with exactly the requested keys. Malformed replies raise ReplyParseError,
// out-of-range values raise ValidationError, and transport failures raise TransportError.
// Numbers are never clamped; only the joint axis is normalized.
//
#pragma once

#include <array>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "splatforge/annotation/client.hpp"
#include "splatforge/annotation/types.hpp"
#include "splatforge/assets/interactive_asset.hpp"

namespace splatforge {

namespace detail {

inline nlohmann::json parse_reply_object(const std::string& text, const std::set<std::string>& keys) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ReplyParseError("", std::string("reply is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ReplyParseError("", "reply must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw ReplyParseError(k, "unexpected key '" + k + "'");
    for (const auto& k : keys)
        if (!j.contains(k)) throw ReplyParseError(k, "missing key '" + k + "'");
    return j;
}

inline double reply_number(const nlohmann::json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ReplyParseError(key, "'" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::string reply_string(const nlohmann::json& j, const std::string& key) {
    if (!j.at(key).is_string()) throw ReplyParseError(key, "'" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline Vec3 reply_vec3(const nlohmann::json& j, const std::string& key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number())
        throw ReplyParseError(key, "'" + key + "' must be an array of 3 numbers");
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline std::string prompt_vec3(const Vec3& v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%.6g, %.6g, %.6g]", v.x(), v.y(), v.z());
    return buf;
}

inline std::string prompt_label_list(const std::vector<std::string>& labels) {
    if (labels.empty()) return "(none given)";
    std::string s;
    for (const auto& l : labels) s += (s.empty() ? "\"" : ", \"") + l + "\"";
    return s;
}

}  // namespace detail

/// Parses an articulation reply {category, joint_type, parts}. When `allowed_labels` is non-empty
/// the named parts must come from it.
inline ArticulationProposal parse_articulation_reply(const std::string& text, const std::vector<std::string>& allowed_labels = {}) {
    const auto j = detail::parse_reply_object(text, {"category", "joint_type", "parts"});
    ArticulationProposal p;
    p.category = detail::reply_string(j, "category");
    if (p.category.empty()) throw ValidationError("category", "must not be empty");
    p.joint_type = parse_articulation_type(detail::reply_string(j, "joint_type"));
    const auto& parts = j.at("parts");
    if (!parts.is_array() || !(parts.empty() || parts.size() == 2) ||
        !std::all_of(parts.begin(), parts.end(), [](const auto& x) { return x.is_string(); }))
        throw ReplyParseError("parts", "'parts' must be [] or [mobile, base] strings");
    if (parts.size() == 2) p.part_labels = std::make_pair(parts[0].get<std::string>(), parts[1].get<std::string>());
    p.validate();
    if (p.part_labels && !allowed_labels.empty())
        for (const auto& l : {p.part_labels->first, p.part_labels->second})
            if (std::find(allowed_labels.begin(), allowed_labels.end(), l) == allowed_labels.end())
                throw ValidationError("parts", "unknown part label '" + l + "'");
    return p;
}

/// Parses {axis, origin, limit_lower, limit_upper} for the given proposal; the axis is normalized.
inline ArticulationSpec parse_joint_reply(const std::string& text, const ArticulationProposal& proposal) {
    const auto j = detail::parse_reply_object(text, {"axis", "origin", "limit_lower", "limit_upper"});
    ArticulationSpec s;
    s.joint_type = proposal.joint_type;
    s.axis = detail::reply_vec3(j, "axis");
    const double n = s.axis.norm();
    if (!std::isfinite(n) || n < 1e-12) throw ValidationError("axis", "zero-norm axis");
    s.axis /= n;
    s.origin = detail::reply_vec3(j, "origin");
    s.limit_lower = detail::reply_number(j, "limit_lower");
    s.limit_upper = detail::reply_number(j, "limit_upper");
    s.mobile_label = proposal.part_labels->first;
    s.base_label = proposal.part_labels->second;
    s.validate();
    return s;
}

inline PhysicsProperties parse_physics_reply(const std::string& text) {
    const auto j = detail::parse_reply_object(text, {"density", "youngs_modulus", "poisson_ratio"});
    PhysicsProperties p{detail::reply_number(j, "density"), detail::reply_number(j, "youngs_modulus"),
                        detail::reply_number(j, "poisson_ratio")};
    p.validate();
    return p;
}

/// Asks for the object's category and articulation. `asset_name` and `part_labels` give the
/// model (and the mock's keyword match) context about the asset.
inline ArticulationProposal infer_articulation(const std::array<OrthoView, 4>& views, AnnotationClient& client,
                                               const std::string& asset_name = "",
                                               const std::vector<std::string>& part_labels = {}) {
    const auto req = make_chat_request(kArticulationPrompt,
                                       {{"asset_name", asset_name.empty() ? "(unnamed)" : asset_name},
                                        {"part_labels", detail::prompt_label_list(part_labels)}},
                                       views, client.config().model);
    return parse_articulation_reply(client.complete(req), part_labels);
}

inline ArticulationSpec infer_joint_parameters(const std::array<OrthoView, 4>& views, const ArticulationProposal& proposal,
                                               const std::pair<Bounds, Bounds>& part_bounds, AnnotationClient& client) {
    proposal.validate();
    if (proposal.joint_type == ArticulationType::none)
        throw ValidationError("joint_type", "joint parameters requested for an unarticulated proposal");
    const auto& [mobile, base] = part_bounds;
    const auto req = make_chat_request(
        kJointParametersPrompt,
        {{"category", proposal.category},
         {"joint_type", to_string(proposal.joint_type)},
         {"mobile_label", proposal.part_labels->first},
         {"base_label", proposal.part_labels->second},
         {"mobile_min", detail::prompt_vec3(mobile.first)},
         {"mobile_max", detail::prompt_vec3(mobile.second)},
         {"base_min", detail::prompt_vec3(base.first)},
         {"base_max", detail::prompt_vec3(base.second)},
         {"limit_unit", proposal.joint_type == ArticulationType::prismatic ? "metres" : "radians"}},
        views, client.config().model);
    return parse_joint_reply(client.complete(req), proposal);
}

inline PhysicsProperties estimate_physics(const std::array<OrthoView, 4>& views, const std::string& category,
                                          AnnotationClient& client) {
    const auto req = make_chat_request(kPhysicsPrompt, {{"category", category}}, views, client.config().model);
    return parse_physics_reply(client.complete(req));
}

/// Distinct face labels in first-appearance order.
inline std::vector<std::string> mesh_labels(const TriangleMesh& mesh) {
    std::vector<std::string> out;
    for (const auto& l : mesh.face_labels)
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    return out;
}

struct AnnotationResult {
    ArticulationProposal proposal;
    InteractiveAsset asset;
};

/// Full annotation of one part-labelled mesh: views → proposal → partition → joint → physics.
/// For an articulated proposal every face not carrying the mobile label joins the base part.
/// An unarticulated asset becomes a single part named after its category.
inline AnnotationResult annotate_mesh(const TriangleMesh& mesh, const std::string& asset_name, AnnotationClient& client,
                                      int resolution = 256) {
    const auto views = render_orthographic_views(mesh, resolution);
    AnnotationResult out;
    out.proposal = infer_articulation(views, client, asset_name, mesh_labels(mesh));
    const PhysicsProperties physics = estimate_physics(views, out.proposal.category, client);
    if (out.proposal.joint_type == ArticulationType::none) {
        TriangleMesh whole = mesh;
        whole.face_labels.clear();
        out.asset = make_interactive_asset({{out.proposal.category, whole}}, physics);
        return out;
    }
    const auto& [mobile_label, base_label] = *out.proposal.part_labels;
    TriangleMesh relabeled = mesh;
    for (auto& l : relabeled.face_labels)
        if (l != mobile_label) l = base_label;
    auto [mobile, base] = partition_mesh(relabeled, mobile_label, base_label);
    const ArticulationSpec spec = infer_joint_parameters(views, out.proposal, {mobile.bounds(), base.bounds()}, client);
    out.asset = make_interactive_asset({{mobile_label, std::move(mobile)}, {base_label, std::move(base)}}, physics, spec);
    return out;
}

}  // namespace splatforge
