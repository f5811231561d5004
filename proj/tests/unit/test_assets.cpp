// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "splatforge/assets/interactive_asset.hpp"
#include "support/assets.hpp"

using namespace splatforge;
namespace tsup = splatforge::test_support;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("splatforge_assets_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

}  // namespace

TEST(Mesh, BoxIsClosedAndOpenBoxIsNot) {
    auto box = make_box(Vec3(1, 2, 3));
    EXPECT_TRUE(is_watertight(box));
    EXPECT_NEAR(box.surface_area(), 2 * (2 + 3 + 6), 1e-12);
    auto open = box;
    open.faces.pop_back();
    EXPECT_FALSE(is_watertight(open));
    auto flipped = box;
    std::swap(flipped.faces[0][1], flipped.faces[0][2]);
    EXPECT_FALSE(is_watertight(flipped));
    EXPECT_TRUE(is_watertight(make_icosphere(1.0, 2)));
    EXPECT_TRUE(is_watertight(make_cylinder(0.1, 0.5)));
}

TEST(MeshIo, RandomMeshRoundTripsExactly) {
    tsup::Rng rng(5);
    const auto dir = temp_dir("roundtrip");
    for (int trial = 0; trial < 5; ++trial) {
        auto m = tsup::random_blob(rng, 0.3, 1);
        m.face_labels.assign(m.faces.size(), "a");
        for (std::size_t i = 0; i < m.faces.size(); i += 3) m.face_labels[i] = "b";
        save_mesh(m, dir / "m.obj");
        const auto back = load_mesh(dir / "m.obj");
        ASSERT_EQ(back.vertices.size(), m.vertices.size());
        ASSERT_EQ(back.faces, m.faces);
        EXPECT_EQ(back.face_labels, m.face_labels);
        for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_EQ(back.vertices[i], m.vertices[i]);
    }
}

TEST(MeshIo, GroupsBecomeFaceLabels) {
    const auto dir = temp_dir("groups");
    write_text(dir / "g.obj",
               "# two groups\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\ng drawer_body\nf 1 2 3\ng main cabinet\nf 1/1/1 3/2/2 4/3/3\n");
    const auto m = load_mesh(dir / "g.obj");
    ASSERT_EQ(m.faces.size(), 2u);
    EXPECT_EQ(m.face_labels, (std::vector<std::string>{"drawer_body", "main cabinet"}));
    EXPECT_EQ(m.faces[1], (Face{0, 2, 3}));
}

TEST(MeshIo, PolygonsFanAndNegativeIndicesResolve) {
    const auto dir = temp_dir("fan");
    write_text(dir / "q.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n");
    const auto m = load_mesh(dir / "q.obj");
    ASSERT_EQ(m.faces.size(), 2u);
    EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
    EXPECT_EQ(m.faces[1], (Face{0, 2, 3}));
    EXPECT_FALSE(m.has_labels());
}

TEST(MeshIo, DegenerateFacesAreDropped) {
    const auto dir = temp_dir("degenerate");
    write_text(dir / "d.obj", "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\n");
    const auto m = load_mesh(dir / "d.obj");
    ASSERT_EQ(m.faces.size(), 1u);
    EXPECT_EQ(m.faces[0], (Face{0, 1, 3}));
}

TEST(MeshIo, MalformedFilesFail) {
    const auto dir = temp_dir("bad");
    write_text(dir / "r.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
    try {
        load_mesh(dir / "r.obj");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "f");
        EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
    }
    write_text(dir / "v.obj", "v 0 zero 0\n");
    EXPECT_THROW(load_mesh(dir / "v.obj"), ParseError);
    EXPECT_THROW(load_mesh(dir / "missing.obj"), IoError);
}

TEST(MassProperties, UnitCubeIsExact) {
    const auto mp = mass_properties(make_box(Vec3(1, 1, 1), Vec3(0.5, 0.5, 0.5)), 1000.0);
    EXPECT_NEAR(mp.volume, 1.0, 1e-9);
    EXPECT_NEAR(mp.mass, 1000.0, 1e-9);
    EXPECT_LT((mp.center_of_mass - Vec3(0.5, 0.5, 0.5)).norm(), 1e-9);
    EXPECT_LT((mp.inertia - Mat3::Identity() * (1000.0 / 6.0)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MassProperties, BoxMatchesClosedForm) {
    const Vec3 e(0.3, 0.7, 1.9);
    const auto mp = mass_properties(make_box(e, Vec3(-2, 5, 1)), 750.0);
    const double m = 750.0 * e.prod();
    EXPECT_NEAR(mp.mass, m, 1e-9 * m);
    const Vec3 diag(m / 12 * (e.y() * e.y() + e.z() * e.z()), m / 12 * (e.x() * e.x() + e.z() * e.z()),
                    m / 12 * (e.x() * e.x() + e.y() * e.y()));
    EXPECT_LT((mp.inertia - Mat3(diag.asDiagonal())).cwiseAbs().maxCoeff(), 1e-9 * diag.maxCoeff());
}

TEST(MassProperties, IcosphereApproachesSolidSphere) {
    const double r = 0.1, rho = 500;
    const auto mp = mass_properties(make_icosphere(r, 3), rho);
    const double analytic = rho * 4.0 / 3.0 * M_PI * r * r * r;
    EXPECT_NEAR(mp.mass, analytic, 0.01 * analytic);
    const double I = 0.4 * analytic * r * r;
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(mp.inertia(k, k), I, 0.02 * I);
}

TEST(MassProperties, TranslationOnlyMovesCenterOfMass) {
    tsup::Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = tsup::random_blob(rng);
        const Vec3 v(tsup::uniform(rng, -3, 3), tsup::uniform(rng, -3, 3), tsup::uniform(rng, -3, 3));
        const auto a = mass_properties(m, 900.0);
        const auto b = mass_properties(transformed(m, RigidTransform::from_translation(v)), 900.0);
        EXPECT_NEAR(a.volume, b.volume, 1e-9);
        EXPECT_NEAR(a.mass, b.mass, 1e-9 * a.mass);
        EXPECT_LT((b.center_of_mass - a.center_of_mass - v).norm(), 1e-9);
        EXPECT_LT((a.inertia - b.inertia).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(MassProperties, ScaleLaws) {
    tsup::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = tsup::random_blob(rng);
        const double s = tsup::uniform(rng, 0.2, 5.0);
        const auto a = mass_properties(m, 1000.0);
        const auto b = mass_properties(scaled(m, s), 1000.0);
        EXPECT_NEAR(b.volume / a.volume, s * s * s, 1e-6 * s * s * s);
        EXPECT_NEAR(b.mass / a.mass, s * s * s, 1e-6 * s * s * s);
        const double s5 = std::pow(s, 5);
        EXPECT_LT((b.inertia - s5 * a.inertia).cwiseAbs().maxCoeff(), 1e-6 * s5 * a.inertia.cwiseAbs().maxCoeff());
    }
}

TEST(MassProperties, InertiaIsPhysical) {
    tsup::Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mp = mass_properties(tsup::random_blob(rng), 1200.0);
        EXPECT_GT(mp.volume, 0);
        EXPECT_LT((mp.inertia - mp.inertia.transpose()).norm(), 1e-12);
        const Vec3 p = Eigen::SelfAdjointEigenSolver<Mat3>(mp.inertia).eigenvalues();
        EXPECT_GE(p.minCoeff(), 0);
        EXPECT_GE(p[0] + p[1], p[2] * (1 - 1e-12));
    }
}

TEST(MassProperties, InsideOutMeshIsFlipped) {
    auto box = make_box(Vec3(1, 2, 3));
    for (auto& f : box.faces) std::swap(f[1], f[2]);
    const auto mp = mass_properties(box, 10.0);
    EXPECT_NEAR(mp.volume, 6.0, 1e-12);
    EXPECT_GT(mp.inertia(0, 0), 0);
}

TEST(MassProperties, OpenMeshIsRejectedOrFallsBack) {
    auto box = make_box(Vec3(1, 2, 3), Vec3(1, 1, 1));
    box.faces.pop_back();
    EXPECT_THROW(mass_properties(box, 10.0), ValidationError);
    const auto mp = mass_properties_or_bounding_box(box, 10.0, "shell");
    EXPECT_NEAR(mp.volume, 6.0, 1e-12);
    EXPECT_NEAR(mp.mass, 60.0, 1e-12);
    EXPECT_LT((mp.center_of_mass - Vec3(1, 1, 1)).norm(), 1e-12);
    EXPECT_THROW(mass_properties(make_box(Vec3(1, 1, 1)), 0.0), ValidationError);
}

TEST(Partition, TwoLabeledBoxesSplitBack) {
    const auto a = make_box(Vec3(1, 1, 1), Vec3(0, 0, 0), "drawer body");
    const auto b = make_box(Vec3(2, 1, 1), Vec3(3, 0, 0), "main cabinet");
    TriangleMesh both = b;
    append_mesh(both, a);
    const auto [mobile, base] = partition_mesh(both, "drawer body", "main cabinet");
    EXPECT_EQ(mobile.faces.size() + base.faces.size(), both.faces.size());
    EXPECT_NEAR(mobile.surface_area() + base.surface_area(), both.surface_area(), 1e-12);
    // Vertices are compacted in first-use order; the box face list touches all 8 corners.
    EXPECT_EQ(mobile.vertices.size(), 8u);
    EXPECT_NEAR(mobile.surface_area(), a.surface_area(), 1e-12);
    EXPECT_NEAR(mass_properties(mobile, 1).volume, 1.0, 1e-12);
    EXPECT_NEAR(mass_properties(base, 1).volume, 2.0, 1e-12);
    for (std::size_t f = 0; f < a.faces.size(); ++f)
        for (int k = 0; k < 3; ++k) EXPECT_EQ(mobile.vertices[mobile.faces[f][k]], a.vertices[a.faces[f][k]]);
}

TEST(Partition, MissingLabelsFail) {
    const auto drawer = make_box(Vec3(1, 1, 1), Vec3::Zero(), "drawer body");
    EXPECT_THROW(partition_mesh(drawer, "drawer body", "main cabinet"), ValidationError);
    EXPECT_THROW(partition_mesh(make_box(Vec3(1, 1, 1)), "drawer body", "main cabinet"), ValidationError);
}

TEST(AssetUrdf, RevoluteLimitsUseEightSignificantDigits) {
    tsup::Rng rng(1);
    auto asset = tsup::random_articulated_asset(rng);
    asset.articulation->joint_type = ArticulationType::revolute;
    asset.articulation->limit_lower = 0.0;
    asset.articulation->limit_upper = M_PI / 2;
    const std::string urdf = build_urdf(asset, "cabinet");
    EXPECT_NE(urdf.find("lower=\"0\" upper=\"1.5707963\""), std::string::npos) << urdf;
    EXPECT_NE(urdf.find("type=\"revolute\""), std::string::npos);
}

TEST(AssetUrdf, EmitParseRoundTrip) {
    tsup::Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const auto asset = tsup::random_articulated_asset(rng);
        const RobotModel r = parse_urdf(build_urdf(asset, "obj"));
        ASSERT_EQ(r.links.size(), 2u);
        ASSERT_EQ(r.joints.size(), 1u);
        const auto a = articulation_from_urdf(r);
        ASSERT_TRUE(a.has_value());
        const auto& e = *asset.articulation;
        EXPECT_EQ(a->joint_type, e.joint_type);
        EXPECT_LT((a->axis - e.axis).norm(), 1e-6);
        EXPECT_LT((a->origin - e.origin).norm(), 1e-6);
        EXPECT_NEAR(a->limit_lower, e.limit_lower, 1e-6);
        EXPECT_NEAR(a->limit_upper, e.limit_upper, 1e-6);
        EXPECT_EQ(a->mobile_label, e.mobile_label);
        EXPECT_EQ(a->base_label, e.base_label);
        for (const auto& l : r.links) {
            const auto& mp = asset.mass.at(l.name);
            ASSERT_TRUE(l.inertial.has_value());
            const Vec3 frame = l.name == e.mobile_label ? e.origin : Vec3::Zero();
            EXPECT_NEAR(l.inertial->mass, mp.mass, 1e-6);
            EXPECT_LT((l.inertial->origin.translation + frame - mp.center_of_mass).norm(), 1e-6);
            EXPECT_LT((l.inertial->inertia - mp.inertia).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(AssetUrdf, RigidAssetIsOneLink) {
    std::map<std::string, TriangleMesh> parts{{"mug", make_icosphere(0.05, 2)}, {"handle", make_box(Vec3(0.02, 0.02, 0.05), Vec3(0.07, 0, 0))}};
    const auto asset = make_interactive_asset(parts, {800, 1e9, 0.3});
    const RobotModel r = parse_urdf(build_urdf(asset, "mug"));
    EXPECT_EQ(r.links.size(), 1u);
    EXPECT_EQ(r.joints.size(), 0u);
    EXPECT_EQ(r.dof(), 0);
    EXPECT_NEAR(r.links[0].inertial->mass, asset.mass.at("mug").mass + asset.mass.at("handle").mass, 1e-9);
    EXPECT_EQ(r.links[0].visual.size(), 2u);
    EXPECT_FALSE(articulation_from_urdf(r).has_value());
}

TEST(AssetUrdf, RejectsReservedNamesAndBadInputs) {
    auto asset = make_interactive_asset({{"world", make_box(Vec3(1, 1, 1))}}, {800, 1e9, 0.3});
    EXPECT_THROW(build_urdf(asset, "x"), ValidationError);
    tsup::Rng rng(3);
    auto bad = tsup::random_articulated_asset(rng);
    bad.mass["drawer body"].inertia(0, 0) = std::nan("");
    EXPECT_THROW(build_urdf(bad, "x"), ValidationError);
    bad = tsup::random_articulated_asset(rng);
    bad.articulation->mobile_label = "lid";
    EXPECT_THROW(build_urdf(bad, "x"), ValidationError);
}

TEST(AssetBundle, WritesLayoutAndLoadsBack) {
    tsup::Rng rng(8);
    auto asset = tsup::random_articulated_asset(rng);
    asset.articulation->limit_lower = -1.0;
    asset.articulation->limit_upper = 1.0;
    const auto root = temp_dir("bundle");
    const auto dir = export_asset_bundle(asset, "cabinet", root);
    EXPECT_EQ(dir, root / "asset" / "cabinet");
    EXPECT_TRUE(fs::exists(dir / "model.urdf"));
    EXPECT_TRUE(fs::exists(dir / "meshes" / "drawer_body.obj"));
    EXPECT_TRUE(fs::exists(dir / "meshes" / "main_cabinet.obj"));
    std::ifstream pf(dir / "physics.json");
    const auto phys = nlohmann::json::parse(pf);
    EXPECT_EQ(phys.at("density").get<double>(), asset.physics.density);
    const RobotModel r = load_urdf(dir / "model.urdf");
    // Collision meshes come back in link frames; posed at q = 0 they reproduce the parts.
    const auto poses = forward_kinematics(r, VecX::Zero(1));
    const auto posed = transformed(r.link("drawer body").collision_mesh, poses.at("drawer body"));
    const auto& orig = asset.parts.at("drawer body");
    ASSERT_EQ(posed.vertices.size(), orig.vertices.size());
    for (std::size_t i = 0; i < orig.vertices.size(); ++i) EXPECT_LT((posed.vertices[i] - orig.vertices[i]).norm(), 1e-6);
}
