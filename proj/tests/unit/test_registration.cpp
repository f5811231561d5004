// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include "splatforge/registration/camera_align.hpp"
#include "splatforge/registration/icp.hpp"
#include "splatforge/registration/kd_tree.hpp"
#include "splatforge/registration/world_align.hpp"
#include "support/registration_cases.hpp"

using namespace splatforge;
namespace tsup = splatforge::test_support;

namespace {

std::vector<Vec3> apply_all(const RigidTransform& T, const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    for (const auto& p : pts) out.push_back(T.apply(p));
    return out;
}

const RobotModel& arm() {
    static const RobotModel r = tsup::make_test_arm();
    return r;
}

RobotModel unit_cube_robot() {
    return tsup::make_chain({}, {{LinkGeometry::Kind::box, {1, 1, 1}, {0, 0, 0}}});
}

}  // namespace

TEST(KdTree, MatchesBruteForce) {
    tsup::Rng rng(1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.emplace_back(tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1), tsup::uniform(rng, 0, 0.1));
    for (int i = 0; i < 50; ++i) pts.push_back(pts[i]);  // duplicates: the lower index must win
    const KdTree tree(pts);
    for (int q = 0; q < 500; ++q) {
        const Vec3 x(tsup::uniform(rng, -1.2, 1.2), tsup::uniform(rng, -1.2, 1.2), tsup::uniform(rng, -0.2, 0.3));
        std::size_t best = 0;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if ((pts[i] - x).squaredNorm() < (pts[best] - x).squaredNorm()) best = i;
        const auto hit = tree.nearest(x);
        EXPECT_EQ(hit.index, best);
        EXPECT_EQ(hit.squared_distance, (pts[best] - x).squaredNorm());
    }
    EXPECT_EQ(tree.nearest(pts[7]).index, 7u);
}

TEST(RigidFit, RecoversExactTransformAndGuardsReflections) {
    tsup::Rng rng(2);
    std::vector<Vec3> p;
    for (int i = 0; i < 50; ++i) p.emplace_back(tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1));
    const RigidTransform T = tsup::random_transform(rng);
    const auto fit = fit_rigid(p, apply_all(T, p));
    EXPECT_LT((fit.matrix() - T.matrix()).norm(), 1e-12);
    // Mirror image: the best proper rotation must still be a rotation.
    std::vector<Vec3> mirrored;
    for (const auto& x : p) mirrored.emplace_back(-x.x(), x.y(), x.z());
    const auto guarded = fit_rigid(p, mirrored);
    EXPECT_TRUE(guarded.is_valid(1e-10));
    EXPECT_NEAR(guarded.rotation.determinant(), 1.0, 1e-12);
    const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(fit_rigid(line, line), SolverError);
}

TEST(Icp, FixedPoint) {
    const auto cloud = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 2000, 1);
    const auto res = icp_align(cloud, cloud, RigidTransform::identity());
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations_used, 1);
    EXPECT_LT((res.transform.matrix() - Mat4::Identity()).norm(), 1e-10);
}

TEST(Icp, RecoversPureTranslation) {
    const auto cloud = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 2000, 2);
    const auto T = RigidTransform::from_translation(Vec3(0.1, 0, 0));
    const auto res = icp_align(cloud, apply_all(T, cloud), RigidTransform::identity());
    EXPECT_TRUE(res.converged);
    EXPECT_LT((res.transform.translation - T.translation).norm(), 1e-9);
    EXPECT_LT((res.transform.rotation - Mat3::Identity()).norm(), 1e-9);
}

TEST(Icp, RecoversRandomTransformsFromNoisyClouds) {
    int ok = 0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = tsup::robot_icp_case(arm(), 100 + trial);
        const auto res = icp_align(c.src, c.dst, RigidTransform::identity());
        const auto e = pose_error(res.transform, c.truth);
        ok += e.rotation_rad < 0.2 * M_PI / 180 && e.translation < 0.002;
        EXPECT_TRUE(res.transform.is_valid(1e-9));
    }
    EXPECT_GE(ok, 4);
}

TEST(Icp, ResidualsNeverIncrease) {
    const auto c = tsup::robot_icp_case(arm(), 7);
    IcpParams p;
    p.correspondence_cutoff = 10.0;
    const auto res = icp_align(c.src, c.dst, RigidTransform::identity(), p);
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        EXPECT_LE(res.trace[k].rms_after, res.trace[k].rms_before + 1e-15);
        if (k > 0) EXPECT_LE(res.trace[k].rms_before, res.trace[k - 1].rms_after + 1e-15);
    }
}

TEST(Icp, LeftInvariance) {
    const auto c = tsup::robot_icp_case(arm(), 11);
    const auto base = icp_align(c.src, c.dst, RigidTransform::identity());
    tsup::Rng rng(12);
    const RigidTransform G = tsup::random_transform(rng, M_PI, 2.0);
    const auto conj = icp_align(apply_all(G, c.src), apply_all(G, c.dst), compose(G, G.inverse()));
    const RigidTransform expected = compose(compose(G, base.transform), G.inverse());
    const auto e = pose_error(conj.transform, expected);
    EXPECT_LT(e.rotation_rad, 1e-6);
    EXPECT_LT(e.translation, 1e-6);
    EXPECT_NEAR(conj.rms_residual, base.rms_residual, 1e-9);
}

TEST(Icp, MirroredCloudStillYieldsRotation) {
    const auto cloud = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 1000, 3);
    std::vector<Vec3> mirrored;
    for (const auto& p : cloud) mirrored.emplace_back(-p.x(), p.y(), p.z());
    IcpParams p;
    p.correspondence_cutoff = 5.0;
    const auto res = icp_align(cloud, mirrored, RigidTransform::identity(), p);
    EXPECT_TRUE(res.transform.is_valid(1e-9));
}

TEST(Icp, Errors) {
    const auto cloud = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 200, 4);
    IcpParams p;
    p.correspondence_cutoff = 1e-3;
    EXPECT_THROW(icp_align(cloud, apply_all(RigidTransform::from_translation(Vec3(1, 0, 0)), cloud), RigidTransform{}, p),
                 SolverError);
    const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(icp_align(line, line, RigidTransform{}), SolverError);
    EXPECT_THROW(icp_align(std::vector<Vec3>{{0, 0, 0}}, cloud, RigidTransform{}), SolverError);
    IcpParams bad;
    bad.trim_fraction = 1.0;
    EXPECT_THROW(icp_align(cloud, cloud, RigidTransform{}, bad), ConfigError);
}

TEST(RobotCloud, UnitCubeFacesAreAreaProportional) {
    const auto cube = unit_cube_robot();
    const auto pts = sample_robot_pointcloud(cube, VecX(0), 6000, 5);
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& p : pts) {
        int axis;
        p.cwiseAbs().maxCoeff(&axis);
        EXPECT_NEAR(std::abs(p[axis]), 0.5, 1e-12);
        ++counts[2 * axis + (p[axis] > 0)];
    }
    for (const int c : counts) EXPECT_NEAR(c, 1000, 50);
}

TEST(RobotCloud, DeterministicAndValidated) {
    const auto a = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 500, 9);
    const auto b = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 500, 9);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample_robot_pointcloud(arm(), tsup::arm_default_q(), 500, 10));
    EXPECT_TRUE(sample_robot_pointcloud(arm(), tsup::arm_default_q(), 0, 9).empty());
    VecX q = tsup::arm_default_q();
    q[1] = 3.0;
    EXPECT_THROW(sample_robot_pointcloud(arm(), q, 10, 1), ValidationError);
    const auto bare = tsup::make_chain(tsup::planar_2r_joints());
    EXPECT_THROW(sample_robot_pointcloud(bare, VecX::Zero(2), 10, 1), ValidationError);
}

namespace {

GaussianScene robot_scene(const std::vector<Vec3>& robot_pts, std::size_t clutter, std::uint64_t seed) {
    tsup::Rng rng(seed);
    GaussianScene s;
    s.feature_dim = 2;
    s.label_table["a robot arm"] = Eigen::Vector2d(1, 0);
    s.label_table["table"] = Eigen::Vector2d(0, 1);
    auto add = [&](const Vec3& p, const Eigen::Vector2d& f) {
        GaussianSplat g;
        g.position = p;
        g.log_scale = Vec3::Constant(-4.0);
        g.sh = ShCoeffs::Zero(1, 3);
        g.feature = f;
        s.splats.push_back(g);
    };
    for (const auto& p : robot_pts) add(p, Eigen::Vector2d(1, 0));
    for (std::size_t i = 0; i < clutter; ++i)
        add(Vec3(tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1), tsup::uniform(rng, -0.1, 0)), Eigen::Vector2d(0, 1));
    return s;
}

}  // namespace

TEST(AlignWorld, CoincidentRobotGivesIdentity) {
    WorldAlignOptions o;
    o.robot_points = 3000;
    o.seed = 21;
    const auto pts = sample_robot_pointcloud(arm(), tsup::arm_default_q(), o.robot_points, o.seed);
    const auto scene = robot_scene(pts, 500, 1);
    const auto res = align_world(scene, arm(), tsup::arm_default_q(), {}, o);
    EXPECT_EQ(res.robot_splats, pts.size());
    EXPECT_LT((res.icp.transform.matrix() - Mat4::Identity()).norm(), 1e-6);
}

TEST(AlignWorld, RecoversKnownDisplacement) {
    WorldAlignOptions o;
    o.seed = 3;
    const auto pts = sample_robot_pointcloud(arm(), tsup::arm_default_q(), 2000, 77);
    tsup::Rng rng(4);
    const RigidTransform T{so3_exp(Vec3(0.1, -0.15, 0.2)), Vec3(0.05, -0.08, 0.03)};
    // The scene sits at T⁻¹ relative to the robot, so the alignment must find T.
    const auto scene = transform_scene(robot_scene(pts, 300, 2), T.inverse());
    const auto res = align_world(scene, arm(), tsup::arm_default_q(), {}, o);
    const auto e = pose_error(res.icp.transform, T);
    EXPECT_LT(e.rotation_rad, 0.2 * M_PI / 180);
    EXPECT_LT(e.translation, 0.002);
    EXPECT_LT((res.scene.splats[0].position - pts[0]).norm(), 0.005);
}

TEST(AlignWorld, MissingRobotClassFails) {
    auto scene = robot_scene({}, 100, 3);
    EXPECT_THROW(align_world(scene, arm(), tsup::arm_default_q()), ValidationError);
    WorldAlignOptions o;
    o.robot_class = "gripper";
    EXPECT_THROW(align_world(scene, arm(), tsup::arm_default_q(), {}, o), ValidationError);
}

TEST(CameraAlign, AlreadyAlignedStaysPut) {
    const auto c = tsup::camera_alignment_case(1, 0, 0, 80, 60, 150);
    const auto res = align_camera(c.scene, c.target, c.truth, {}, c.opts);
    EXPECT_EQ(res.iterations, 0);
    EXPECT_LT((res.camera.world_to_camera.matrix() - c.truth.world_to_camera.matrix()).norm(), 1e-8);
    for (const double l : res.trace) EXPECT_LT(l, 1e-12);
}

TEST(CameraAlign, RecoversPerturbedPose) {
    const auto c = tsup::camera_alignment_case(1001);
    const auto res = align_camera(c.scene, c.target, c.init, {}, c.opts);
    const auto e = tsup::camera_error(res.camera, c.truth);
    EXPECT_LT(e.rotation_rad * 180 / M_PI, 0.2);
    EXPECT_LT(e.translation, 0.002);
    // The trace never increases inside a pyramid level.
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        if (res.trace_level[k] == res.trace_level[k - 1]) EXPECT_LE(res.trace[k], res.trace[k - 1]);
    EXPECT_EQ(res.trace_level.front(), 2);
    EXPECT_EQ(res.trace_level.back(), 0);
}

TEST(CameraAlign, PlainGradientDirectionDescends) {
    const auto c = tsup::camera_alignment_case(5, 2 * M_PI / 180, 0.02, 80, 60, 200);
    CamAlignParams p;
    p.direction = DescentDirection::gradient;
    p.max_iterations = 20;
    const auto res = align_camera(c.scene, c.target, c.init, p, c.opts);
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        if (res.trace_level[k] == res.trace_level[k - 1]) EXPECT_LE(res.trace[k], res.trace[k - 1]);
    EXPECT_LT(res.final_loss, photometric_loss(c.scene, c.init, c.target, c.opts));
}

TEST(CameraAlign, GaugeInvariance) {
    const auto c = tsup::camera_alignment_case(9, 3 * M_PI / 180, 0.03, 80, 60, 200);
    CamAlignParams p;
    p.max_iterations = 40;
    const auto a = align_camera(c.scene, c.target, c.init, p, c.opts);
    tsup::Rng rng(3);
    const RigidTransform G = tsup::random_transform(rng, 1.0, 1.0);
    CameraModel init = c.init;
    init.world_to_camera = compose(c.init.world_to_camera, G.inverse());
    const auto b = align_camera(transform_scene(c.scene, G), c.target, init, p, c.opts);
    EXPECT_NEAR(a.final_loss, b.final_loss, 1e-6);
}

TEST(CameraAlign, Errors) {
    const auto c = tsup::camera_alignment_case(2, 0, 0, 40, 30, 50);
    EXPECT_THROW(align_camera(c.scene, ImageD(41, 30, 3), c.init, {}, c.opts), ValidationError);
    auto broken = c.scene;
    for (auto& g : broken.splats) g.sh(0, 0) = std::nan("");
    EXPECT_THROW(align_camera(broken, c.target, c.init, {}, c.opts), SolverError);
    CamAlignParams bad;
    bad.pyramid_levels = 0;
    EXPECT_THROW(align_camera(c.scene, c.target, c.init, bad, c.opts), ConfigError);
}

TEST(Adjoint, ConjugatesExponential) {
    tsup::Rng rng(6);
    const RigidTransform T = tsup::random_transform(rng);
    Vec6 xi;
    xi << 0.1, -0.2, 0.3, 0.05, 0.02, -0.04;
    const RigidTransform lhs = compose(compose(T, se3_exp(xi)), T.inverse());
    EXPECT_LT((lhs.matrix() - se3_exp(adjoint(T) * xi).matrix()).norm(), 1e-12);
}
