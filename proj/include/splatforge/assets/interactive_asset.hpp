// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Articulated or rigid objects assembled from labeled mesh parts, and their URDF bundles.
//
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "splatforge/annotation/types.hpp"
#include "splatforge/assets/mass_properties.hpp"
#include "splatforge/assets/mesh.hpp"
#include "splatforge/kinematics/urdf.hpp"

namespace splatforge {

struct InteractiveAsset {
    std::map<std::string, TriangleMesh> parts;  // label → mesh in the object frame
    PhysicsProperties physics;
    std::optional<ArticulationSpec> articulation;
    std::map<std::string, MassProperties> mass;

    void validate() const {
        if (parts.empty()) throw ValidationError("parts", "asset has no parts");
        physics.validate();
        if (articulation) {
            articulation->validate();
            if (!parts.count(articulation->mobile_label))
                throw ValidationError("articulation.mobile_label", "no part '" + articulation->mobile_label + "'");
            if (!parts.count(articulation->base_label))
                throw ValidationError("articulation.base_label", "no part '" + articulation->base_label + "'");
        }
        for (const auto& [label, m] : parts) {
            if (!mass.count(label)) throw ValidationError("mass", "no mass properties for part '" + label + "'");
            if (m.empty()) throw ValidationError("parts." + label, "empty mesh");
        }
    }
};

/// Computes per-part mass properties from the density (bounding box for non-closed parts).
inline InteractiveAsset make_interactive_asset(std::map<std::string, TriangleMesh> parts, const PhysicsProperties& physics,
                                               std::optional<ArticulationSpec> articulation = std::nullopt) {
    InteractiveAsset a;
    a.parts = std::move(parts);
    a.physics = physics;
    a.articulation = std::move(articulation);
    physics.validate();
    for (const auto& [label, m] : a.parts) a.mass[label] = mass_properties_or_bounding_box(m, physics.density, label);
    a.validate();
    return a;
}

/// Mass properties of several bodies combined (parallel-axis theorem), about the joint COM.
inline MassProperties combine_mass_properties(const std::vector<MassProperties>& parts) {
    MassProperties out;
    for (const auto& p : parts) {
        out.volume += p.volume;
        out.mass += p.mass;
        out.center_of_mass += p.mass * p.center_of_mass;
    }
    if (!(out.mass > 0)) throw ValidationError("mass", "combined mass must be positive");
    out.center_of_mass /= out.mass;
    for (const auto& p : parts) {
        const Vec3 d = p.center_of_mass - out.center_of_mass;
        out.inertia += p.inertia + p.mass * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
    }
    return out;
}

inline const std::set<std::string>& reserved_link_names() {
    static const std::set<std::string> names{"world"};
    return names;
}

/// File name used for a part's mesh inside the bundle.
inline std::string part_mesh_filename(const std::string& label) {
    std::string f;
    for (const char c : label) f += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return "meshes/" + f + ".obj";
}

/// Kinematic model of the asset: with an articulation, the base part is the root link and the
/// mobile part hangs off one joint placed at the articulation origin; otherwise a single link.
inline RobotModel asset_robot_model(const InteractiveAsset& asset, const std::string& name) {
    asset.validate();
    for (const auto& [label, m] : asset.parts)
        if (reserved_link_names().count(label)) throw ValidationError("parts", "part label '" + label + "' is reserved");
    RobotModel r;
    r.name = name;
    auto geometry = [](const std::string& label, const Vec3& offset) {
        LinkGeometry g;
        g.kind = LinkGeometry::Kind::mesh;
        g.filename = part_mesh_filename(label);
        g.origin = RigidTransform::from_translation(offset);
        return g;
    };
    auto inertial = [](const MassProperties& mp, const Vec3& offset) {
        if (!std::isfinite(mp.mass) || !mp.inertia.allFinite() || !mp.center_of_mass.allFinite())
            throw ValidationError("inertia", "non-finite mass properties");
        return Inertial{mp.mass, RigidTransform::from_translation(mp.center_of_mass + offset), mp.inertia};
    };
    if (asset.articulation) {
        if (asset.parts.size() != 2) throw ValidationError("parts", "an articulated asset must have exactly two parts");
        const auto& a = *asset.articulation;
        Link base{a.base_label};
        base.inertial = inertial(asset.mass.at(a.base_label), Vec3::Zero());
        base.visual.push_back(geometry(a.base_label, Vec3::Zero()));
        base.collision = base.visual;
        Link mobile{a.mobile_label};
        mobile.inertial = inertial(asset.mass.at(a.mobile_label), -a.origin);
        mobile.visual.push_back(geometry(a.mobile_label, -a.origin));
        mobile.collision = mobile.visual;
        r.links = {base, mobile};
        Joint j;
        j.name = a.mobile_label + "_joint";
        j.type = a.joint_type == ArticulationType::revolute ? JointType::revolute : JointType::prismatic;
        j.parent = a.base_label;
        j.child = a.mobile_label;
        j.origin = RigidTransform::from_translation(a.origin);
        j.axis = a.axis;
        j.lower = a.limit_lower;
        j.upper = a.limit_upper;
        r.joints.push_back(j);
    } else {
        Link l{name};
        std::vector<MassProperties> mps;
        for (const auto& [label, m] : asset.parts) {
            mps.push_back(asset.mass.at(label));
            l.visual.push_back(geometry(label, Vec3::Zero()));
        }
        l.collision = l.visual;
        l.inertial = inertial(combine_mass_properties(mps), Vec3::Zero());
        r.links.push_back(l);
    }
    r.finalize();
    return r;
}

inline std::string build_urdf(const InteractiveAsset& asset, const std::string& name) {
    return write_urdf(asset_robot_model(asset, name));
}

/// Articulation recovered from a parsed asset URDF (two links, one movable joint).
inline std::optional<ArticulationSpec> articulation_from_urdf(const RobotModel& r) {
    if (r.joints.empty()) return std::nullopt;
    if (r.joints.size() != 1 || !r.joints[0].movable())
        throw ValidationError("joints", "asset URDF must have zero joints or one movable joint");
    const Joint& j = r.joints[0];
    ArticulationSpec a;
    a.joint_type = j.type == JointType::revolute ? ArticulationType::revolute : ArticulationType::prismatic;
    a.axis = j.axis;
    a.origin = j.origin.translation;
    a.limit_lower = j.lower;
    a.limit_upper = j.upper;
    a.mobile_label = j.child;
    a.base_label = j.parent;
    return a;
}

/// Writes root/asset/{name}/model.urdf, meshes/*.obj and physics.json; returns the bundle directory.
inline std::filesystem::path export_asset_bundle(const InteractiveAsset& asset, const std::string& name,
                                                 const std::filesystem::path& root) {
    const std::string urdf = build_urdf(asset, name);
    const auto dir = root / "asset" / name;
    std::error_code ec;
    std::filesystem::create_directories(dir / "meshes", ec);
    if (ec) throw IoError("cannot create " + (dir / "meshes").string() + ": " + ec.message());
    for (const auto& [label, m] : asset.parts) save_mesh(m, dir / part_mesh_filename(label));
    {
        std::ofstream f(dir / "model.urdf");
        if (!f) throw IoError("cannot write " + (dir / "model.urdf").string());
        f << urdf;
    }
    nlohmann::json phys = to_json_value(asset.physics);
    if (asset.articulation) phys["articulation"] = to_json_value(*asset.articulation);
    std::ofstream f(dir / "physics.json");
    if (!f) throw IoError("cannot write " + (dir / "physics.json").string());
    f << phys.dump(2) << "\n";
    return dir;
}

/// Reads a bundle written by export_asset_bundle: part meshes come from the link visuals,
/// physics from physics.json and the articulation from the URDF joint. For a rigid asset
/// each part is named after its mesh file.
inline InteractiveAsset load_asset_bundle(const std::filesystem::path& dir) {
    const auto phys_path = dir / "physics.json";
    std::ifstream pf(phys_path);
    if (!pf) throw IoError("cannot open " + phys_path.string());
    PhysicsProperties physics;
    try {
        nlohmann::json j;
        pf >> j;
        physics.density = j.at("density").get<double>();
        physics.youngs_modulus = j.at("youngs_modulus").get<double>();
        physics.poisson_ratio = j.at("poisson_ratio").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(phys_path.string(), "physics", e.what());
    }
    const auto urdf_path = dir / "model.urdf";
    std::ifstream uf(urdf_path);
    if (!uf) throw IoError("cannot open " + urdf_path.string());
    std::stringstream ss;
    ss << uf.rdbuf();
    const RobotModel r = parse_urdf(ss.str(), urdf_path.string());
    const auto articulation = articulation_from_urdf(r);
    std::map<std::string, TriangleMesh> parts;
    for (const auto& l : r.links)
        for (const auto& g : l.visual) {
            if (g.kind != LinkGeometry::Kind::mesh) throw ValidationError("visual", "asset bundle parts must be meshes");
            TriangleMesh m = load_mesh(dir / g.filename);
            m.face_labels.clear();
            const std::string label = articulation ? l.name : std::filesystem::path(g.filename).stem().string();
            if (!parts.emplace(label, std::move(m)).second) throw ValidationError("visual", "duplicate part '" + label + "'");
        }
    return make_interactive_asset(std::move(parts), physics, articulation);
}

}  // namespace splatforge
