// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include "splatforge/kinematics/ik.hpp"
#include "splatforge/kinematics/urdf.hpp"
#include "support/assets.hpp"
#include "support/robots.hpp"

using namespace splatforge;
namespace tsup = splatforge::test_support;

namespace {

const char* kDrawerUrdf = R"(<?xml version="1.0"?>
<robot name="drawer">
  <link name="cabinet"/>
  <link name="drawer"/>
  <joint name="slide" type="prismatic">
    <parent link="cabinet"/>
    <child link="drawer"/>
    <origin xyz="0.1 0 0.2" rpy="0 0 0"/>
    <axis xyz="2 0 0"/>
    <limit lower="0" upper="0.3" effort="10" velocity="0.5"/>
  </joint>
</robot>)";

std::string two_link(const std::string& joint_type, const std::string& limit = R"(<limit lower="-1" upper="1"/>)") {
    return R"(<robot name="r"><link name="a"/><link name="b"/><joint name="j" type=")" + joint_type +
           R"("><parent link="a"/><child link="b"/>)" + limit + "</joint></robot>";
}

}  // namespace

TEST(Urdf, ParsesPrismaticDrawer) {
    const auto r = parse_urdf(kDrawerUrdf);
    EXPECT_EQ(r.name, "drawer");
    EXPECT_EQ(r.links.size(), 2u);
    ASSERT_EQ(r.dof(), 1);
    EXPECT_EQ(r.root, "cabinet");
    const auto& j = r.movable_joint(0);
    EXPECT_EQ(j.type, JointType::prismatic);
    EXPECT_EQ(j.axis, Vec3::UnitX());
    EXPECT_EQ(j.upper, 0.3);
    EXPECT_EQ(j.origin.translation, Vec3(0.1, 0, 0.2));
}

TEST(Urdf, AssetForgeDrawerParsesToItsSpec) {
    tsup::Rng rng(4);
    auto asset = tsup::random_articulated_asset(rng);
    asset.articulation->joint_type = ArticulationType::prismatic;
    const auto r = parse_urdf(build_urdf(asset, "drawer"));
    EXPECT_EQ(r.links.size(), 2u);
    ASSERT_EQ(r.joints.size(), 1u);
    EXPECT_EQ(r.joints[0].type, JointType::prismatic);
    EXPECT_EQ(r.root, asset.articulation->base_label);
}

TEST(Urdf, RejectsCyclesUnknownTypesAndMissingLimits) {
    const std::string cycle = R"(<robot name="c"><link name="a"/><link name="b"/>
      <joint name="j1" type="fixed"><parent link="a"/><child link="b"/></joint>
      <joint name="j2" type="fixed"><parent link="b"/><child link="a"/></joint></robot>)";
    try {
        parse_urdf(cycle);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos) << e.what();
    }
    try {
        parse_urdf(two_link("ball"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "joint.j.type");
    }
    try {
        parse_urdf(two_link("revolute", ""));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "joint.j.limit");
    }
    EXPECT_THROW(parse_urdf(two_link("revolute", R"(<limit lower="1" upper="0"/>)")), ParseError);
    EXPECT_THROW(parse_urdf("<robot><link name=\"a\"></robot>"), ParseError);
    EXPECT_THROW(parse_urdf(R"(<robot><link name="a"/><link name="b"/></robot>)"), ParseError);  // two roots
}

TEST(Urdf, FixedOnlyRobotHasNoDof) {
    const auto r = parse_urdf(two_link("fixed", ""));
    EXPECT_EQ(r.dof(), 0);
    const auto poses = forward_kinematics(r, VecX(0));
    EXPECT_EQ(poses.size(), 2u);
}

TEST(Urdf, WriteParseRoundTripOfChain) {
    const auto r = tsup::make_test_arm();
    const auto back = parse_urdf(write_urdf(r));
    ASSERT_EQ(back.dof(), r.dof());
    tsup::Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        VecX q(r.dof());
        for (int k = 0; k < r.dof(); ++k) q[k] = tsup::uniform(rng, r.movable_joint(k).lower, r.movable_joint(k).upper);
        const auto a = link_poses(r, q), b = link_poses(back, q);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a[i].matrix() - b[i].matrix()).norm(), 1e-6);
    }
}

TEST(ForwardKinematics, ZeroConfigurationAccumulatesOrigins) {
    const auto js = tsup::arm_joints();
    const auto r = tsup::make_chain(js);
    const auto poses = link_poses(r, VecX::Zero(6));
    Vec3 p = Vec3::Zero();
    for (std::size_t k = 0; k < js.size(); ++k) {
        p += js[k].xyz;
        EXPECT_LT((poses[k + 1].translation - p).norm(), 1e-15);
        EXPECT_LT((poses[k + 1].rotation - Mat3::Identity()).norm(), 1e-15);
    }
}

TEST(ForwardKinematics, QuarterTurnAboutZ) {
    const auto r = tsup::make_chain({{JointType::revolute, {0, 0, 0}, {0, 0, 0}, {0, 0, 1}, -4, 4},
                                     {JointType::fixed, {1, 0, 0}, {0, 0, 0}, {1, 0, 0}, 0, 0}});
    VecX q(1);
    q << M_PI / 2;
    const auto p = link_pose(r, q, "link_2");
    EXPECT_LT((p.translation - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(ForwardKinematics, MatchesMatrixChainOracle) {
    tsup::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<tsup::ChainJoint> js;
        for (int k = 0; k < 6; ++k) {
            const auto type = k == 2 ? JointType::prismatic : (k == 4 ? JointType::fixed : JointType::revolute);
            js.push_back({type,
                          {tsup::uniform(rng, -0.3, 0.3), tsup::uniform(rng, -0.3, 0.3), tsup::uniform(rng, 0, 0.4)},
                          {tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1), tsup::uniform(rng, -1, 1)},
                          tsup::random_unit(rng),
                          -2,
                          2});
        }
        const auto r = tsup::make_chain(js);
        VecX q(r.dof());
        for (int k = 0; k < q.size(); ++k) q[k] = tsup::uniform(rng, -2, 2);
        const auto poses = link_poses(r, q);
        const auto oracle = tsup::chain_oracle(js, q);
        for (std::size_t i = 0; i < poses.size(); ++i) EXPECT_LT((poses[i].matrix() - oracle[i]).norm(), 1e-12) << i;
    }
}

TEST(ForwardKinematics, RejectsWrongLength) {
    const auto r = tsup::make_test_arm();
    EXPECT_THROW(link_poses(r, VecX::Zero(3)), ValidationError);
    VecX q = VecX::Zero(6);
    q[1] = 5.0;
    EXPECT_THROW(r.check_config(q), ValidationError);
}

TEST(InverseKinematics, ReachedTargetNeedsNoIterations) {
    const auto r = tsup::make_test_arm();
    const VecX q0 = tsup::arm_default_q();
    const auto res = ik_solve(r, "link_6", link_pose(r, q0, "link_6"), q0);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 0);
    EXPECT_EQ(res.q, q0);
}

TEST(InverseKinematics, PlanarTwoLinkMatchesClosedForm) {
    const double a = 0.3, b = 0.2;
    const auto r = tsup::make_chain(tsup::planar_2r_joints(a, b));
    tsup::Rng rng(9);
    IkOptions opts;
    opts.rotation_weight = 0.0;
    opts.pos_tol = 1e-6;
    int converged = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const double rad = tsup::uniform(rng, 0.12, 0.48), ang = tsup::uniform(rng, -M_PI, M_PI);
        const Vec3 target(rad * std::cos(ang), rad * std::sin(ang), 0);
        VecX q0(2);
        q0 << tsup::uniform(rng, -M_PI, M_PI), tsup::uniform(rng, 0.3, 2.5) * (trial % 2 ? 1 : -1);
        const auto res = ik_solve(r, "link_3", RigidTransform::from_translation(target), q0, opts);
        if (!res.converged) continue;
        ++converged;
        const double c2 = (rad * rad - a * a - b * b) / (2 * a * b);
        const double q2 = std::copysign(std::acos(std::clamp(c2, -1.0, 1.0)), res.q[1]);
        const double q1 = std::atan2(target.y(), target.x()) - std::atan2(b * std::sin(q2), a + b * std::cos(q2));
        const Vec3 elbow(a * std::cos(q1), a * std::sin(q1), 0);
        EXPECT_LT((link_pose(r, res.q, "link_2").translation - elbow).norm(), 1e-4);
        EXPECT_LT((link_pose(r, res.q, "link_3").translation - target).norm(), 1e-4);
    }
    EXPECT_GE(converged, 49);
}

// Folded 2R arm aiming radially outward: every Jacobian column is tangential, so the first
// descent cannot move and only a restart reaches the target.
TEST(InverseKinematics, RestartRecoversFromSingularStart) {
    const auto r = tsup::make_chain(tsup::planar_2r_joints(0.3, 0.2));
    const double ang = -2.69;
    const Vec3 target(0.47 * std::cos(ang), 0.47 * std::sin(ang), 0);
    VecX q0(2);
    q0 << ang, M_PI;
    IkOptions opts;
    opts.rotation_weight = 0.0;
    opts.pos_tol = 1e-6;
    opts.restarts = 0;
    EXPECT_FALSE(ik_solve(r, "link_3", RigidTransform::from_translation(target), q0, opts).converged);
    opts.restarts = 8;
    const auto res = ik_solve(r, "link_3", RigidTransform::from_translation(target), q0, opts);
    ASSERT_TRUE(res.converged);
    EXPECT_LT((link_pose(r, res.q, "link_3").translation - target).norm(), 1e-6);
    // Same seed, same answer.
    EXPECT_EQ(ik_solve(r, "link_3", RigidTransform::from_translation(target), q0, opts).q, res.q);
}

TEST(InverseKinematics, UnreachableTargetReportsFailure) {
    const auto r = tsup::make_chain(tsup::planar_2r_joints());
    IkOptions opts;
    opts.rotation_weight = 0;
    VecX q0(2);
    q0 << 0.2, 0.4;
    const auto res = ik_solve(r, "link_3", RigidTransform::from_translation(Vec3(0.8, 0, 0)), q0, opts);
    EXPECT_FALSE(res.converged);
    EXPECT_NEAR(res.position_error, 0.3, 1e-3);
    EXPECT_THROW(ik_solve(r, "nope", RigidTransform{}, q0), ValidationError);
}

TEST(InverseKinematics, SixDofPoseTargetsConverge) {
    const auto r = tsup::make_test_arm();
    tsup::Rng rng(10);
    int converged = 0;
    for (int trial = 0; trial < 10; ++trial) {
        VecX qt = tsup::arm_default_q();
        for (int k = 0; k < 6; ++k) qt[k] += tsup::uniform(rng, -0.3, 0.3);
        const auto target = link_pose(r, qt, "link_6");
        const auto res = ik_solve(r, "link_6", target, tsup::arm_default_q());
        converged += res.converged;
        if (res.converged) {
            EXPECT_LE(res.position_error, 1e-4);
            EXPECT_LE(res.rotation_error, 1e-3);
            EXPECT_NO_THROW(r.check_config(res.q));
        }
    }
    EXPECT_GE(converged, 9);
}

TEST(Planning, SingleWaypointAtCurrentPoseIsConstant) {
    const auto r = tsup::make_test_arm();
    const VecX q0 = tsup::arm_default_q();
    const auto traj = plan_linear(r, "link_6", q0, {link_pose(r, q0, "link_6")}, 0.05);
    ASSERT_EQ(traj.configs.size(), 2u);
    for (const auto& q : traj.configs) EXPECT_EQ(q, q0);
}

TEST(Planning, PassesThroughWaypointsWithinLimits) {
    const auto r = tsup::make_test_arm();
    const VecX q0 = tsup::arm_default_q();
    VecX qa = q0, qb = q0;
    qa[0] += 0.4;
    qa[2] -= 0.3;
    qb[1] += 0.2;
    qb[4] -= 0.5;
    const std::vector<RigidTransform> wps{link_pose(r, qa, "link_6"), link_pose(r, qb, "link_6")};
    PlanOptions opts;
    opts.max_joint_speed = 0.8;
    const double dt = 0.05;
    const auto traj = plan_linear(r, "link_6", q0, wps, dt, opts);
    ASSERT_EQ(traj.waypoint_knots.size(), 2u);
    for (std::size_t w = 0; w < 2; ++w) {
        const auto p = link_pose(r, traj.configs[traj.waypoint_knots[w]], "link_6");
        EXPECT_LE((p.translation - wps[w].translation).norm(), opts.ik.pos_tol);
    }
    for (std::size_t i = 0; i < traj.configs.size(); ++i) {
        EXPECT_NO_THROW(r.check_config(traj.configs[i]));
        if (i == 0) continue;
        EXPECT_GT(traj.timestamps[i], traj.timestamps[i - 1]);
        EXPECT_LE((traj.configs[i] - traj.configs[i - 1]).cwiseAbs().maxCoeff(), opts.max_joint_speed * dt + 1e-12);
    }
}

TEST(Planning, UnreachableWaypointNamesIndex) {
    const auto r = tsup::make_chain(tsup::planar_2r_joints());
    PlanOptions opts;
    opts.ik.rotation_weight = 0;
    VecX q0(2);
    q0 << 0.2, 0.4;
    const std::vector<RigidTransform> wps{link_pose(r, q0, "link_3"), RigidTransform::from_translation(Vec3(2, 0, 0))};
    try {
        plan_linear(r, "link_3", q0, wps, 0.05, opts);
        FAIL();
    } catch (const PlanningError& e) {
        EXPECT_EQ(e.waypoint(), 1u);
    }
    EXPECT_THROW(plan_linear(r, "link_3", q0, {}, 0.05, opts), ValidationError);
}
