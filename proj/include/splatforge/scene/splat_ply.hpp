// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Binary little-endian splat PLY:
//   x y z nx ny nz f_dc_0..2 f_rest_0..f_rest_{3(L+1)^2-4} opacity scale_0..2 rot_0..3 [feature_0..feature_{d-1}]
// All properties float32. Normals are ignored on read and written as zeros.
//
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/log.hpp"
#include "splatforge/scene/gaussian.hpp"

namespace splatforge {

static_assert(std::endian::native == std::endian::little, "splat PLY I/O assumes a little-endian host");

struct SplatPlyOptions {
    /// Feature length to allocate (zero-filled) when the file carries no feature_* properties.
    int default_feature_dim = 0;
};

namespace detail {

inline int sh_degree_from_rest_count(std::size_t rest) {
    for (int l = 0; l <= 3; ++l)
        if (static_cast<std::size_t>(3 * sh::coeff_count(l) - 3) == rest) return l;
    return -1;
}

// Parses "prefix_<n>" and returns n, or nullopt.
inline std::optional<int> indexed_property(const std::string& name, const std::string& prefix) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    const std::string tail = name.substr(prefix.size());
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return std::stoi(tail);
}

}  // namespace detail

/// Quaternions whose squared norm deviates from 1 by more than this are renormalized on load.
inline constexpr double kQuaternionNormTolerance = 1e-6;

inline GaussianScene load_splat_ply(const std::filesystem::path& path, const SplatPlyOptions& opts = {}) {
    const std::string src = path.string();
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + src);

    std::string line;
    std::getline(f, line);
    if (line != "ply") throw ParseError(src, "magic", "missing 'ply' magic line");

    std::size_t vertex_count = 0;
    bool have_vertex = false, have_format = false;
    std::vector<std::string> props;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "end_header") break;
        if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
        if (kw == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian") throw ParseError(src, "format", "only binary_little_endian is supported");
            have_format = true;
        } else if (kw == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (name != "vertex" || have_vertex) throw ParseError(src, "element", "expected a single 'vertex' element");
            if (!ls || count < 0) throw ParseError(src, "element", "bad vertex count");
            vertex_count = static_cast<std::size_t>(count);
            have_vertex = true;
        } else if (kw == "property") {
            if (!have_vertex) throw ParseError(src, "property", "property before element");
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw ParseError(src, name, "list properties are not supported");
            if (type != "float" && type != "float32") throw ParseError(src, name, "property must be float32, got " + type);
            props.push_back(name);
        } else {
            throw ParseError(src, kw, "unexpected header keyword '" + kw + "'");
        }
    }
    if (line != "end_header") throw ParseError(src, "end_header", "header not terminated");
    if (!have_format) throw ParseError(src, "format", "missing format line");
    if (!have_vertex) throw ParseError(src, "element", "missing vertex element");

    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (!slot.emplace(props[i], i).second) throw ParseError(src, props[i], "duplicate property " + props[i]);
    }
    auto require = [&](const std::string& name) {
        auto it = slot.find(name);
        if (it == slot.end()) throw ParseError(src, name, "missing property " + name);
        return it->second;
    };

    std::size_t rest_count = 0, feature_count = 0;
    for (const auto& p : props) {
        if (detail::indexed_property(p, "f_rest_")) ++rest_count;
        if (detail::indexed_property(p, "feature_")) ++feature_count;
    }
    const int degree = detail::sh_degree_from_rest_count(rest_count);
    if (degree < 0)
        throw ParseError(src, "f_rest", "f_rest property count " + std::to_string(rest_count) +
                                            " is inconsistent with any sh degree in [0, 3]");
    const int K = sh::coeff_count(degree);

    const std::size_t ix = require("x"), iy = require("y"), iz = require("z");
    std::size_t idc[3], iscale[3], irot[4];
    for (int c = 0; c < 3; ++c) idc[c] = require("f_dc_" + std::to_string(c));
    std::vector<std::size_t> irest(rest_count);
    for (std::size_t r = 0; r < rest_count; ++r) irest[r] = require("f_rest_" + std::to_string(r));
    const std::size_t iop = require("opacity");
    for (int c = 0; c < 3; ++c) iscale[c] = require("scale_" + std::to_string(c));
    for (int c = 0; c < 4; ++c) irot[c] = require("rot_" + std::to_string(c));
    std::vector<std::size_t> ifeat(feature_count);
    for (std::size_t r = 0; r < feature_count; ++r) ifeat[r] = require("feature_" + std::to_string(r));

    GaussianScene scene;
    scene.sh_degree = degree;
    scene.feature_dim = feature_count > 0 ? static_cast<int>(feature_count) : opts.default_feature_dim;
    scene.splats.resize(vertex_count);

    std::vector<float> rec(props.size());
    std::size_t renormalized = 0;
    for (std::size_t v = 0; v < vertex_count; ++v) {
        f.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size() * sizeof(float)));
        if (!f) throw ParseError(src, "vertex", "truncated vertex data at record " + std::to_string(v));
        for (std::size_t i = 0; i < rec.size(); ++i)
            if (!std::isfinite(rec[i]))
                throw ParseError(src, props[i], "non-finite value in record " + std::to_string(v) + " property " + props[i]);
        auto& g = scene.splats[v];
        g.position = Vec3(rec[ix], rec[iy], rec[iz]);
        g.sh.resize(K, 3);
        for (int c = 0; c < 3; ++c) {
            g.sh(0, c) = rec[idc[c]];
            for (int k = 1; k < K; ++k) g.sh(k, c) = rec[irest[c * (K - 1) + (k - 1)]];
        }
        g.opacity_logit = rec[iop];
        g.log_scale = Vec3(rec[iscale[0]], rec[iscale[1]], rec[iscale[2]]);
        g.rotation = Quat(rec[irot[0]], rec[irot[1]], rec[irot[2]], rec[irot[3]]);
        const double n2 = g.rotation.squaredNorm();
        if (n2 < 1e-24) throw ParseError(src, "rot_0", "zero quaternion in record " + std::to_string(v));
        if (std::abs(n2 - 1.0) > kQuaternionNormTolerance) {
            g.rotation.normalize();
            ++renormalized;
        }
        g.feature = VecX::Zero(scene.feature_dim);
        for (std::size_t r = 0; r < feature_count; ++r) g.feature[static_cast<Eigen::Index>(r)] = rec[ifeat[r]];
    }
    if (renormalized > 0)
        log::warn("normalized splat quaternions on load", {{"file", src}, {"count", renormalized}});
    return scene;
}

inline void save_splat_ply(const GaussianScene& scene, const std::filesystem::path& path) {
    const int K = sh::coeff_count(scene.sh_degree);
    const int d = scene.feature_dim;
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.splats.size() << "\n";
    for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) header << "property float " << n << "\n";
    for (int r = 0; r < 3 * K - 3; ++r) header << "property float f_rest_" << r << "\n";
    for (const char* n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        header << "property float " << n << "\n";
    for (int r = 0; r < d; ++r) header << "property float feature_" << r << "\n";
    header << "end_header\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    const std::string h = header.str();
    f.write(h.data(), static_cast<std::streamsize>(h.size()));

    const std::size_t n_props = 9 + (3 * K - 3) + 8 + d;
    std::vector<float> rec(n_props);
    for (const auto& g : scene.splats) {
        if (g.sh.rows() != K || g.feature.size() != d) throw ValidationError("scene", "splat shape does not match scene");
        std::size_t i = 0;
        for (int c = 0; c < 3; ++c) rec[i++] = static_cast<float>(g.position[c]);
        rec[i++] = 0.f;
        rec[i++] = 0.f;
        rec[i++] = 0.f;
        for (int c = 0; c < 3; ++c) rec[i++] = static_cast<float>(g.sh(0, c));
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k < K; ++k) rec[i++] = static_cast<float>(g.sh(k, c));
        rec[i++] = static_cast<float>(g.opacity_logit);
        for (int c = 0; c < 3; ++c) rec[i++] = static_cast<float>(g.log_scale[c]);
        rec[i++] = static_cast<float>(g.rotation.w());
        rec[i++] = static_cast<float>(g.rotation.x());
        rec[i++] = static_cast<float>(g.rotation.y());
        rec[i++] = static_cast<float>(g.rotation.z());
        for (int r = 0; r < d; ++r) rec[i++] = static_cast<float>(g.feature[r]);
        f.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size() * sizeof(float)));
    }
    if (!f) throw IoError("write failed: " + path.string());
}

// Label table: JSON object {class name: [d floats]}.

inline std::map<std::string, VecX> load_label_table(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), "", e.what());
    }
    if (!j.is_object()) throw ParseError(path.string(), "", "label table must be a JSON object");
    std::map<std::string, VecX> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_array()) throw ParseError(path.string(), it.key(), "embedding must be an array");
        VecX e(static_cast<Eigen::Index>(it.value().size()));
        for (std::size_t k = 0; k < it.value().size(); ++k) {
            if (!it.value()[k].is_number()) throw ParseError(path.string(), it.key(), "embedding entries must be numbers");
            e[static_cast<Eigen::Index>(k)] = it.value()[k].get<double>();
        }
        out.emplace(it.key(), std::move(e));
    }
    return out;
}

inline void save_label_table(const std::map<std::string, VecX>& table, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, e] : table) j[name] = std::vector<double>(e.data(), e.data() + e.size());
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

}  // namespace splatforge
