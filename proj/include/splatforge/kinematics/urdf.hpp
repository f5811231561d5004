// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// URDF subset: links (inertial, visual, collision with mesh/box/cylinder/sphere geometry) and
// joints of type revolute, prismatic or fixed. Anything else is rejected.
//
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "splatforge/assets/mesh.hpp"
#include "splatforge/kinematics/robot_model.hpp"

namespace splatforge {

namespace detail {

namespace pt = boost::property_tree;

inline std::string xml_attr(const pt::ptree& node, const std::string& name, const std::string& src, const std::string& where,
                            bool required = true, const std::string& fallback = {}) {
    const auto v = node.get_optional<std::string>("<xmlattr>." + name);
    if (!v) {
        if (required) throw ParseError(src, where + "." + name, "missing attribute '" + name + "' on " + where);
        return fallback;
    }
    return *v;
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t count, const std::string& src,
                                         const std::string& field) {
    std::istringstream is(text);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(src, field, "not a number: '" + tok + "'");
        }
        if (!std::isfinite(out.back())) throw ParseError(src, field, "non-finite value");
    }
    if (out.size() != count)
        throw ParseError(src, field, "expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
    return out;
}

inline double parse_number(const std::string& text, const std::string& src, const std::string& field) {
    return parse_numbers(text, 1, src, field)[0];
}

inline Vec3 parse_vec3(const std::string& text, const std::string& src, const std::string& field) {
    const auto v = parse_numbers(text, 3, src, field);
    return {v[0], v[1], v[2]};
}

inline RigidTransform parse_origin(const pt::ptree& parent, const std::string& src, const std::string& where) {
    const auto o = parent.get_child_optional("origin");
    if (!o) return {};
    const std::string xyz = xml_attr(*o, "xyz", src, where + ".origin", false, "0 0 0");
    const std::string rpy = xml_attr(*o, "rpy", src, where + ".origin", false, "0 0 0");
    return {rpy_to_matrix(parse_vec3(rpy, src, where + ".origin.rpy")), parse_vec3(xyz, src, where + ".origin.xyz")};
}

inline LinkGeometry parse_geometry(const pt::ptree& node, const std::string& src, const std::string& where) {
    LinkGeometry g;
    g.origin = parse_origin(node, src, where);
    const auto geom = node.get_child_optional("geometry");
    if (!geom) throw ParseError(src, where + ".geometry", "missing geometry");
    if (const auto m = geom->get_child_optional("mesh")) {
        g.kind = LinkGeometry::Kind::mesh;
        g.filename = xml_attr(*m, "filename", src, where + ".mesh");
        g.scale = parse_vec3(xml_attr(*m, "scale", src, where + ".mesh", false, "1 1 1"), src, where + ".mesh.scale");
    } else if (const auto b = geom->get_child_optional("box")) {
        g.kind = LinkGeometry::Kind::box;
        g.size = parse_vec3(xml_attr(*b, "size", src, where + ".box"), src, where + ".box.size");
    } else if (const auto c = geom->get_child_optional("cylinder")) {
        g.kind = LinkGeometry::Kind::cylinder;
        g.radius = parse_number(xml_attr(*c, "radius", src, where + ".cylinder"), src, where + ".cylinder.radius");
        g.length = parse_number(xml_attr(*c, "length", src, where + ".cylinder"), src, where + ".cylinder.length");
    } else if (const auto s = geom->get_child_optional("sphere")) {
        g.kind = LinkGeometry::Kind::sphere;
        g.radius = parse_number(xml_attr(*s, "radius", src, where + ".sphere"), src, where + ".sphere.radius");
    } else {
        throw ParseError(src, where + ".geometry", "unsupported geometry");
    }
    return g;
}

inline std::string fmt_g(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::string fmt_vec(const Vec3& v, int digits) {
    return fmt_g(v.x(), digits) + " " + fmt_g(v.y(), digits) + " " + fmt_g(v.z(), digits);
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Parses a URDF document. Mesh references are recorded but not loaded (see load_robot_geometry).
inline RobotModel parse_urdf(const std::string& text, const std::string& source = "<urdf>") {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_xml(is, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(source, "xml", e.what());
    }
    const auto robot_node = tree.get_child_optional("robot");
    if (!robot_node) throw ParseError(source, "robot", "missing <robot> element");
    RobotModel robot;
    robot.name = detail::xml_attr(*robot_node, "name", source, "robot", false);
    for (const auto& [tag, node] : *robot_node) {
        if (tag == "link") {
            Link l;
            l.name = detail::xml_attr(node, "name", source, "link");
            const std::string where = "link." + l.name;
            if (const auto in = node.get_child_optional("inertial")) {
                Inertial inertial;
                inertial.origin = detail::parse_origin(*in, source, where + ".inertial");
                const auto m = in->get_child_optional("mass");
                if (!m) throw ParseError(source, where + ".inertial.mass", "missing mass");
                inertial.mass = detail::parse_number(detail::xml_attr(*m, "value", source, where + ".inertial.mass"), source,
                                                     where + ".inertial.mass");
                const auto I = in->get_child_optional("inertia");
                if (!I) throw ParseError(source, where + ".inertial.inertia", "missing inertia");
                auto comp = [&](const char* k) {
                    return detail::parse_number(detail::xml_attr(*I, k, source, where + ".inertial.inertia"), source,
                                                where + ".inertial.inertia." + k);
                };
                const double ixx = comp("ixx"), ixy = comp("ixy"), ixz = comp("ixz"), iyy = comp("iyy"), iyz = comp("iyz"),
                             izz = comp("izz");
                inertial.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
                l.inertial = inertial;
            }
            for (const auto& [ctag, child] : node) {
                if (ctag == "visual") l.visual.push_back(detail::parse_geometry(child, source, where + ".visual"));
                if (ctag == "collision") l.collision.push_back(detail::parse_geometry(child, source, where + ".collision"));
            }
            robot.links.push_back(std::move(l));
        } else if (tag == "joint") {
            Joint j;
            j.name = detail::xml_attr(node, "name", source, "joint");
            const std::string where = "joint." + j.name;
            const std::string type = detail::xml_attr(node, "type", source, where);
            if (type == "revolute") j.type = JointType::revolute;
            else if (type == "prismatic") j.type = JointType::prismatic;
            else if (type == "fixed") j.type = JointType::fixed;
            else throw ParseError(source, where + ".type", "unsupported joint type '" + type + "'");
            const auto parent = node.get_child_optional("parent");
            const auto child = node.get_child_optional("child");
            if (!parent) throw ParseError(source, where + ".parent", "missing parent");
            if (!child) throw ParseError(source, where + ".child", "missing child");
            j.parent = detail::xml_attr(*parent, "link", source, where + ".parent");
            j.child = detail::xml_attr(*child, "link", source, where + ".child");
            j.origin = detail::parse_origin(node, source, where);
            if (const auto ax = node.get_child_optional("axis"))
                j.axis = detail::parse_vec3(detail::xml_attr(*ax, "xyz", source, where + ".axis"), source, where + ".axis");
            if (j.movable()) {
                const auto lim = node.get_child_optional("limit");
                if (!lim) throw ParseError(source, where + ".limit", "movable joint needs <limit>");
                auto num = [&](const char* k, bool required) {
                    const std::string s = detail::xml_attr(*lim, k, source, where + ".limit", required, "0");
                    return detail::parse_number(s, source, where + ".limit." + k);
                };
                j.lower = num("lower", true);
                j.upper = num("upper", true);
                j.effort = num("effort", false);
                j.velocity = num("velocity", false);
            }
            robot.joints.push_back(std::move(j));
        }
    }
    try {
        robot.finalize();
    } catch (const ValidationError& e) {
        throw ParseError(source, e.field(), e.what());
    }
    return robot;
}

/// Builds each link's collision mesh. Mesh filenames resolve against `base_dir`; a
/// "package://" prefix is stripped.
inline void load_robot_geometry(RobotModel& robot, const std::filesystem::path& base_dir) {
    for (auto& l : robot.links) {
        l.collision_mesh = {};
        for (const auto& g : l.collision) {
            TriangleMesh m;
            switch (g.kind) {
                case LinkGeometry::Kind::mesh: {
                    std::string f = g.filename;
                    if (f.rfind("package://", 0) == 0) f = f.substr(10);
                    m = load_mesh(base_dir / f);
                    for (auto& v : m.vertices) v = v.cwiseProduct(g.scale);
                    break;
                }
                case LinkGeometry::Kind::box: m = make_box(g.size); break;
                case LinkGeometry::Kind::cylinder: m = make_cylinder(g.radius, g.length); break;
                case LinkGeometry::Kind::sphere: m = make_icosphere(g.radius, 2); break;
            }
            m.face_labels.clear();
            append_mesh(l.collision_mesh, transformed(m, g.origin));
        }
    }
}

inline RobotModel load_urdf(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    RobotModel robot = parse_urdf(ss.str(), path.string());
    load_robot_geometry(robot, path.parent_path());
    return robot;
}

/// Serializes the model. Poses, axes and limits use 8 significant digits; inertial values
/// use 17 so masses and inertias survive a round trip exactly.
inline std::string write_urdf(const RobotModel& robot) {
    using detail::fmt_g;
    using detail::fmt_vec;
    std::ostringstream o;
    auto origin = [&](const RigidTransform& T, int digits, const std::string& indent) {
        o << indent << "<origin xyz=\"" << fmt_vec(T.translation, digits) << "\" rpy=\""
          << fmt_vec(matrix_to_rpy(T.rotation), digits) << "\"/>\n";
    };
    auto geometry = [&](const LinkGeometry& g, const char* tag) {
        o << "    <" << tag << ">\n";
        origin(g.origin, 8, "      ");
        o << "      <geometry>";
        switch (g.kind) {
            case LinkGeometry::Kind::mesh:
                o << "<mesh filename=\"" << detail::xml_escape(g.filename) << "\"";
                if (g.scale != Vec3::Ones()) o << " scale=\"" << fmt_vec(g.scale, 8) << "\"";
                o << "/>";
                break;
            case LinkGeometry::Kind::box: o << "<box size=\"" << fmt_vec(g.size, 8) << "\"/>"; break;
            case LinkGeometry::Kind::cylinder:
                o << "<cylinder radius=\"" << fmt_g(g.radius, 8) << "\" length=\"" << fmt_g(g.length, 8) << "\"/>";
                break;
            case LinkGeometry::Kind::sphere: o << "<sphere radius=\"" << fmt_g(g.radius, 8) << "\"/>"; break;
        }
        o << "</geometry>\n    </" << tag << ">\n";
    };
    o << "<?xml version=\"1.0\"?>\n<robot name=\"" << detail::xml_escape(robot.name) << "\">\n";
    for (const auto& l : robot.links) {
        o << "  <link name=\"" << detail::xml_escape(l.name) << "\">\n";
        if (l.inertial) {
            const auto& in = *l.inertial;
            o << "    <inertial>\n";
            origin(in.origin, 17, "      ");
            o << "      <mass value=\"" << fmt_g(in.mass, 17) << "\"/>\n";
            o << "      <inertia ixx=\"" << fmt_g(in.inertia(0, 0), 17) << "\" ixy=\"" << fmt_g(in.inertia(0, 1), 17)
              << "\" ixz=\"" << fmt_g(in.inertia(0, 2), 17) << "\" iyy=\"" << fmt_g(in.inertia(1, 1), 17) << "\" iyz=\""
              << fmt_g(in.inertia(1, 2), 17) << "\" izz=\"" << fmt_g(in.inertia(2, 2), 17) << "\"/>\n";
            o << "    </inertial>\n";
        }
        for (const auto& g : l.visual) geometry(g, "visual");
        for (const auto& g : l.collision) geometry(g, "collision");
        o << "  </link>\n";
    }
    for (const auto& j : robot.joints) {
        o << "  <joint name=\"" << detail::xml_escape(j.name) << "\" type=\"" << to_string(j.type) << "\">\n";
        o << "    <parent link=\"" << detail::xml_escape(j.parent) << "\"/>\n";
        o << "    <child link=\"" << detail::xml_escape(j.child) << "\"/>\n";
        origin(j.origin, 8, "    ");
        if (j.movable()) {
            o << "    <axis xyz=\"" << fmt_vec(j.axis, 8) << "\"/>\n";
            o << "    <limit lower=\"" << fmt_g(j.lower, 8) << "\" upper=\"" << fmt_g(j.upper, 8) << "\" effort=\""
              << fmt_g(j.effort, 8) << "\" velocity=\"" << fmt_g(j.velocity, 8) << "\"/>\n";
        }
        o << "  </joint>\n";
    }
    o << "</robot>\n";
    return o.str();
}

}  // namespace splatforge
