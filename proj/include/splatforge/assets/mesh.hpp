// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "splatforge/core/error.hpp"
#include "splatforge/core/log.hpp"
#include "splatforge/core/rigid_transform.hpp"

namespace splatforge {

using Face = std::array<int, 3>;

using Bounds = std::pair<Vec3, Vec3>;  // axis-aligned (min, max)

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<std::string> face_labels;  // empty, or one label per face

    bool empty() const { return faces.empty(); }
    bool has_labels() const { return !face_labels.empty(); }

    Vec3 face_normal_area(std::size_t f) const {  // normal scaled by twice the area
        const auto& t = faces[f];
        return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    }
    double face_area(std::size_t f) const { return 0.5 * face_normal_area(f).norm(); }

    double surface_area() const {
        double a = 0;
        for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
        return a;
    }

    Bounds bounds() const {
        if (vertices.empty()) return {Vec3::Zero(), Vec3::Zero()};
        Vec3 lo = vertices.front(), hi = vertices.front();
        for (const auto& v : vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        return {lo, hi};
    }

    void validate() const {
        const int n = static_cast<int>(vertices.size());
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (const int i : faces[f])
                if (i < 0 || i >= n) throw ValidationError("faces", "face " + std::to_string(f) + " index out of range");
        if (!face_labels.empty() && face_labels.size() != faces.size())
            throw ValidationError("face_labels", "label count does not match face count");
    }
};

inline TriangleMesh transformed(const TriangleMesh& m, const RigidTransform& T) {
    TriangleMesh out = m;
    for (auto& v : out.vertices) v = T.apply(v);
    return out;
}

inline TriangleMesh scaled(const TriangleMesh& m, double s) {
    TriangleMesh out = m;
    for (auto& v : out.vertices) v *= s;
    return out;
}

/// Appends `b` to `a` (labels kept only if both carry them or both are empty).
inline void append_mesh(TriangleMesh& a, const TriangleMesh& b) {
    const int off = static_cast<int>(a.vertices.size());
    const bool labels = a.faces.empty() ? b.has_labels() : (a.has_labels() && b.has_labels());
    if (!labels) a.face_labels.clear();
    a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (const auto& f : b.faces) a.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    if (labels) a.face_labels.insert(a.face_labels.end(), b.face_labels.begin(), b.face_labels.end());
}

/// Every undirected edge is used by exactly two faces, once in each direction.
inline bool is_watertight(const TriangleMesh& m) {
    if (m.faces.empty()) return false;
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : m.faces)
        for (int k = 0; k < 3; ++k) ++directed[{f[k], f[(k + 1) % 3]}];
    for (const auto& [e, count] : directed) {
        if (count != 1) return false;
        const auto it = directed.find({e.second, e.first});
        if (it == directed.end() || it->second != 1) return false;
    }
    return true;
}

// ---- OBJ ------------------------------------------------------------------------------------

/// ASCII OBJ with `v` and `f` records; `g`/`o` names become face labels. Polygons are fan
/// triangulated, zero-area faces dropped (with a warning).
inline TriangleMesh load_mesh(const std::filesystem::path& path) {
    const std::string src = path.string();
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + src);
    TriangleMesh m;
    std::vector<std::string> labels;
    std::string group;
    bool any_group = false;
    std::string line;
    int lineno = 0;
    auto parse_index = [&](const std::string& tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        int idx = 0;
        try {
            std::size_t used = 0;
            idx = std::stoi(head, &used);
            if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
            throw ParseError(src, "f", "line " + std::to_string(lineno) + ": bad face index '" + tok + "'");
        }
        const int n = static_cast<int>(m.vertices.size());
        const int zero_based = idx > 0 ? idx - 1 : n + idx;
        if (idx == 0 || zero_based < 0 || zero_based >= n)
            throw ParseError(src, "f", "line " + std::to_string(lineno) + ": face index " + std::to_string(idx) + " out of range");
        return zero_based;
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw) || kw[0] == '#') continue;
        if (kw == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z())) throw ParseError(src, "v", "line " + std::to_string(lineno) + ": bad vertex");
            if (!v.allFinite()) throw ParseError(src, "v", "line " + std::to_string(lineno) + ": non-finite vertex");
            m.vertices.push_back(v);
        } else if (kw == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) idx.push_back(parse_index(tok));
            if (idx.size() < 3) throw ParseError(src, "f", "line " + std::to_string(lineno) + ": face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                m.faces.push_back({idx[0], idx[k], idx[k + 1]});
                labels.push_back(group);
            }
        } else if (kw == "g" || kw == "o") {
            std::getline(ls >> std::ws, group);
            any_group = true;
        }
        // vn, vt, usemtl, mtllib, s: ignored
    }
    if (any_group) m.face_labels = std::move(labels);
    // Drop degenerate faces.
    TriangleMesh clean;
    clean.vertices = m.vertices;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
        if (m.face_normal_area(i).squaredNorm() <= 0.0) {
            ++dropped;
            continue;
        }
        clean.faces.push_back(m.faces[i]);
        if (m.has_labels()) clean.face_labels.push_back(m.face_labels[i]);
    }
    if (dropped) log::warn("dropped degenerate faces", {{"file", src}, {"count", dropped}});
    return clean;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void save_mesh(const TriangleMesh& m, const std::filesystem::path& path) {
    m.validate();
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    for (const auto& v : m.vertices) f << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    const std::string* current = nullptr;
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
        if (m.has_labels() && (!current || *current != m.face_labels[i])) {
            current = &m.face_labels[i];
            f << "g " << *current << '\n';
        }
        f << "f " << m.faces[i][0] + 1 << ' ' << m.faces[i][1] + 1 << ' ' << m.faces[i][2] + 1 << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

// ---- partitioning ----------------------------------------------------------------------------

/// Faces carrying `label`, with vertices compacted in first-use order.
inline TriangleMesh extract_label(const TriangleMesh& m, const std::string& label) {
    TriangleMesh out;
    std::unordered_map<int, int> remap;
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
        if (m.face_labels[i] != label) continue;
        Face nf;
        for (int k = 0; k < 3; ++k) {
            const int v = m.faces[i][k];
            auto [it, inserted] = remap.emplace(v, static_cast<int>(out.vertices.size()));
            if (inserted) out.vertices.push_back(m.vertices[v]);
            nf[k] = it->second;
        }
        out.faces.push_back(nf);
        out.face_labels.push_back(label);
    }
    return out;
}

inline std::pair<TriangleMesh, TriangleMesh> partition_mesh(const TriangleMesh& m, const std::string& mobile_label,
                                                            const std::string& base_label) {
    if (!m.has_labels()) throw ValidationError("face_labels", "mesh has no face labels");
    auto mobile = extract_label(m, mobile_label);
    auto base = extract_label(m, base_label);
    if (mobile.faces.empty()) throw ValidationError("mobile_label", "no faces labeled '" + mobile_label + "'");
    if (base.faces.empty()) throw ValidationError("base_label", "no faces labeled '" + base_label + "'");
    return {std::move(mobile), std::move(base)};
}

// ---- primitives ------------------------------------------------------------------------------

/// Axis-aligned box with outward-facing triangles.
inline TriangleMesh make_box(const Vec3& size, const Vec3& center = Vec3::Zero(), const std::string& label = {}) {
    TriangleMesh m;
    const Vec3 h = 0.5 * size;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z()));
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    if (!label.empty()) m.face_labels.assign(m.faces.size(), label);
    return m;
}

/// Icosphere from a subdivided icosahedron, vertices projected to the sphere.
inline TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            return mid[key] = static_cast<int>(v.size()) - 1;
        };
        std::vector<Face> nf;
        for (const auto& tri : f) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            nf.push_back({tri[0], a, c});
            nf.push_back({tri[1], b, a});
            nf.push_back({tri[2], c, b});
            nf.push_back({a, b, c});
        }
        f = std::move(nf);
    }
    TriangleMesh m;
    for (const auto& p : v) m.vertices.push_back(center + radius * p);
    m.faces = std::move(f);
    return m;
}

/// Closed cylinder along z centered at the origin.
inline TriangleMesh make_cylinder(double radius, double length, int segments = 24) {
    TriangleMesh m;
    const double h = 0.5 * length;
    for (int i = 0; i < segments; ++i) {
        const double a = 2 * M_PI * i / segments;
        m.vertices.push_back(Vec3(radius * std::cos(a), radius * std::sin(a), -h));
        m.vertices.push_back(Vec3(radius * std::cos(a), radius * std::sin(a), h));
    }
    const int bottom = static_cast<int>(m.vertices.size());
    m.vertices.push_back(Vec3(0, 0, -h));
    m.vertices.push_back(Vec3(0, 0, h));
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        m.faces.push_back({b0, b1, t1});
        m.faces.push_back({b0, t1, t0});
        m.faces.push_back({bottom, b1, b0});
        m.faces.push_back({bottom + 1, t0, t1});
    }
    return m;
}

}  // namespace splatforge
