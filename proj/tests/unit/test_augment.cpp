// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "splatforge/augment/augmentation.hpp"
#include "splatforge/scene/scene_transform.hpp"
#include "support/generators.hpp"

using namespace splatforge;
namespace tsup = splatforge::test_support;

namespace {

// Standard deviation of N(0, σ²) truncated to ±kσ: σ·sqrt(1 − 2kφ(k) / (2Φ(k) − 1)).
double truncated_normal_sd(double sigma, double k) {
    const double phi = std::exp(-0.5 * k * k) / std::sqrt(2 * M_PI);
    const double mass = std::erf(k / std::sqrt(2.0));
    return sigma * std::sqrt(1.0 - 2.0 * k * phi / mass);
}

bool bit_equal(const GaussianScene& a, const GaussianScene& b) {
    if (a.splats.size() != b.splats.size() || a.sh_degree != b.sh_degree) return false;
    for (std::size_t i = 0; i < a.splats.size(); ++i) {
        const auto& x = a.splats[i];
        const auto& y = b.splats[i];
        if (x.sh.size() != y.sh.size() || std::memcmp(x.sh.data(), y.sh.data(), sizeof(double) * x.sh.size()) != 0) return false;
        if (x.position != y.position || x.log_scale != y.log_scale || x.opacity_logit != y.opacity_logit ||
            x.rotation.coeffs() != y.rotation.coeffs() || x.feature != y.feature)
            return false;
    }
    return true;
}

GaussianScene flat_scene(std::size_t n, std::uint64_t seed, int sh_degree = 0) {
    tsup::Rng rng(seed);
    return tsup::random_render_scene(rng, n, sh_degree, 0);
}

}  // namespace

TEST(ObjectPlacement, AnnulusBoundsAreExact) {
    const ObjectAugmentConfig cfg;  // radii [0.28, 0.35]
    auto rng = Philox::stream(1, "object-placement");
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_object_placement(cfg, rng);
        const double r = p.pose.translation.head<2>().norm();
        EXPECT_GE(p.radius, 0.28);
        EXPECT_LE(p.radius, 0.35);
        EXPECT_NEAR(r, p.radius, 1e-15);
        EXPECT_GE(r, 0.28 - 1e-15);  // never inside the robot-base exclusion disk
        EXPECT_EQ(p.pose.translation.z(), cfg.support_height);
        const double theta = std::atan2(p.pose.translation.y(), p.pose.translation.x());
        EXPECT_GE(theta, -M_PI / 2 - 1e-12);
        EXPECT_LE(theta, M_PI / 2 + 1e-12);
        EXPECT_GE(p.uniform_scale, 0.9);
        EXPECT_LE(p.uniform_scale, 1.1);
        EXPECT_GE(p.yaw, 0.0);
        EXPECT_LT(p.yaw, 2 * M_PI);
        Mat3 Rz;
        Rz << std::cos(p.yaw), -std::sin(p.yaw), 0, std::sin(p.yaw), std::cos(p.yaw), 0, 0, 0, 1;
        EXPECT_LT((p.pose.rotation - Rz).norm(), 1e-12);
    }
}

TEST(ObjectPlacement, CollapsedRangesAreDeterministic) {
    ObjectAugmentConfig cfg;
    cfg.radius_range = {0.3, 0.3};
    cfg.yaw_range = {0, 0};
    cfg.scale_range = {1, 1};
    cfg.sector_range = {0, 0};
    auto rng = Philox::stream(2, "object-placement");
    for (int i = 0; i < 100; ++i) {
        const auto p = sample_object_placement(cfg, rng);
        EXPECT_EQ(p.radius, 0.3);
        EXPECT_EQ(p.yaw, 0.0);
        EXPECT_EQ(p.uniform_scale, 1.0);
        EXPECT_EQ(p.pose.rotation, Mat3::Identity());
        EXPECT_EQ(p.pose.translation, Vec3(0.3, 0, 0));
    }
}

TEST(ObjectPlacement, SecondMomentIsAreaUniform) {
    const ObjectAugmentConfig cfg;
    auto rng = Philox::stream(3, "object-placement");
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += std::pow(sample_object_placement(cfg, rng).radius, 2);
    const double expected = (0.28 * 0.28 + 0.35 * 0.35) / 2;
    EXPECT_NEAR(sum / n / expected, 1.0, 0.01);
}

TEST(ObjectPlacement, StreamsAreReproducible) {
    const ObjectAugmentConfig cfg;
    auto a = Philox::stream(9, "object-placement", 4);
    auto b = Philox::stream(9, "object-placement", 4);
    auto c = Philox::stream(9, "object-placement", 5);
    for (int i = 0; i < 50; ++i) {
        const auto pa = sample_object_placement(cfg, a);
        const auto pb = sample_object_placement(cfg, b);
        const auto pc = sample_object_placement(cfg, c);
        EXPECT_EQ(pa.pose.matrix(), pb.pose.matrix());
        EXPECT_NE(pa.pose.translation, pc.pose.translation);
    }
}

TEST(PerturbCamera, ZeroSigmaReturnsBase) {
    const auto base = tsup::front_camera(64, 48, 60.0);
    CameraAugmentConfig cfg;
    cfg.translation_sigma = 0;
    cfg.rotation_sigma = 0;
    auto rng = Philox::stream(1, "camera");
    const auto out = perturb_camera(base, cfg, rng);
    EXPECT_EQ(out.world_to_camera.matrix(), base.world_to_camera.matrix());
    EXPECT_EQ(out.fx, base.fx);
    EXPECT_EQ(out.cy, base.cy);
}

TEST(PerturbCamera, StaysInSo3AndMatchesTruncatedMoments) {
    const auto base = tsup::front_camera(64, 48, 60.0);
    const CameraAugmentConfig cfg;
    auto rng = Philox::stream(2, "camera");
    const int n = 100000;
    Vec3 sum = Vec3::Zero(), sum2 = Vec3::Zero();
    Vec3 wsum2 = Vec3::Zero();
    for (int i = 0; i < n; ++i) {
        const auto cam = perturb_camera(base, cfg, rng);
        const Mat3& R = cam.world_to_camera.rotation;
        if (i < 10000) {
            EXPECT_LT((R.transpose() * R - Mat3::Identity()).norm(), 1e-9);
            EXPECT_NEAR(R.determinant(), 1.0, 1e-9);
        }
        EXPECT_EQ(cam.fx, base.fx);
        EXPECT_EQ(cam.width, base.width);
        const RigidTransform delta = compose(cam.world_to_camera, base.world_to_camera.inverse());
        const Vec3 w = so3_log(delta.rotation);
        for (int k = 0; k < 3; ++k) {
            EXPECT_LE(std::abs(delta.translation[k]), 3 * cfg.translation_sigma + 1e-12);
            EXPECT_LE(std::abs(w[k]), 3 * cfg.rotation_sigma + 1e-9);
        }
        sum += delta.translation;
        sum2 += delta.translation.cwiseAbs2();
        wsum2 += w.cwiseAbs2();
    }
    const double sd_t = truncated_normal_sd(cfg.translation_sigma, cfg.truncation);
    const double sd_w = truncated_normal_sd(cfg.rotation_sigma, cfg.truncation);
    for (int k = 0; k < 3; ++k) {
        const double mean = sum[k] / n;
        const double sd = std::sqrt(sum2[k] / n - mean * mean);
        EXPECT_NEAR(sd / sd_t, 1.0, 0.03) << "axis " << k;
        EXPECT_NEAR(std::sqrt(wsum2[k] / n) / sd_w, 1.0, 0.03) << "axis " << k;
    }
}

TEST(AugmentLighting, IdentityConfigIsBitStable) {
    auto scene = flat_scene(500, 1, 2);
    scene.splats[0].sh(0, 0) = -0.0;  // 1·(−0) + 0 would turn this into +0
    LightingAugmentConfig cfg;
    cfg.color_scale_range = {1, 1};
    cfg.color_offset_range = {0, 0};
    cfg.noise_sigma = 0;
    auto rng = Philox::stream(1, "lighting");
    EXPECT_TRUE(bit_equal(augment_lighting(scene, cfg, rng), scene));
}

TEST(AugmentLighting, AffineLawIsExact) {
    const auto scene = flat_scene(500, 2, 1);
    LightingAugmentConfig cfg;
    cfg.color_scale_range = {2, 2};
    cfg.color_offset_range = {0.1, 0.1};
    cfg.noise_sigma = 0;
    auto rng = Philox::stream(1, "lighting");
    LightingDraw d;
    const auto out = augment_lighting(scene, cfg, rng, &d);
    EXPECT_EQ(d.scale, 2.0);
    EXPECT_EQ(d.offset, 0.1);
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        for (int k = 0; k < 3; ++k) EXPECT_EQ(out.splats[i].sh(0, k), 2.0 * scene.splats[i].sh(0, k) + 0.1);
        EXPECT_EQ(out.splats[i].sh.bottomRows(3), scene.splats[i].sh.bottomRows(3));
        EXPECT_EQ(out.splats[i].position, scene.splats[i].position);
    }
}

TEST(AugmentLighting, NoiseVarianceMatchesSigma) {
    const auto scene = flat_scene(100000, 3);
    LightingAugmentConfig cfg;
    cfg.color_scale_range = {1, 1};
    cfg.color_offset_range = {0, 0};
    cfg.noise_sigma = 0.01;
    auto rng = Philox::stream(1, "lighting");
    const auto out = augment_lighting(scene, cfg, rng);
    for (int k = 0; k < 3; ++k) {
        double s = 0, s2 = 0;
        for (std::size_t i = 0; i < scene.splats.size(); ++i) {
            const double e = out.splats[i].sh(0, k) - scene.splats[i].sh(0, k);
            s += e;
            s2 += e * e;
        }
        const double n = static_cast<double>(scene.splats.size());
        const double var = s2 / n - (s / n) * (s / n);
        EXPECT_NEAR(var / (cfg.noise_sigma * cfg.noise_sigma), 1.0, 0.05);
    }
}

TEST(AugmentLighting, CommutesWithTransformScene) {
    const auto scene = flat_scene(300, 4, 1);
    tsup::Rng r(5);
    const RigidTransform T = tsup::random_transform(r);
    const LightingAugmentConfig cfg;
    auto a = Philox::stream(7, "lighting");
    auto b = Philox::stream(7, "lighting");
    const auto x = transform_scene(augment_lighting(scene, cfg, a), T);
    const auto y = augment_lighting(transform_scene(scene, T), cfg, b);
    EXPECT_TRUE(bit_equal(x, y));
}

TEST(ViaPoint, ZeroRangeIsGoal) {
    tsup::Rng r(6);
    const RigidTransform goal = tsup::random_transform(r);
    TrajectoryAugmentConfig cfg;
    cfg.via_offset_min = cfg.via_offset_max = Vec3::Zero();
    auto rng = Philox::stream(1, "via");
    const auto via = sample_via_point(goal, cfg, rng);
    EXPECT_EQ(via.matrix(), goal.matrix());
}

TEST(ViaPoint, SamplesStayInBoxWithUniformMean) {
    tsup::Rng r(7);
    const RigidTransform goal = tsup::random_transform(r);
    TrajectoryAugmentConfig cfg;
    cfg.via_offset_min = Vec3(0.01, -0.05, 0.0);
    cfg.via_offset_max = Vec3(0.05, -0.01, 0.06);
    auto rng = Philox::stream(2, "via");
    Vec3 sum = Vec3::Zero();
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto via = sample_via_point(goal, cfg, rng);
        const Vec3 off = via.translation - goal.translation;
        for (int k = 0; k < 3; ++k) {
            EXPECT_GE(off[k], cfg.via_offset_min[k] - 1e-15);
            EXPECT_LE(off[k], cfg.via_offset_max[k] + 1e-15);
        }
        EXPECT_EQ(via.rotation, goal.rotation);
        sum += off;
    }
    const Vec3 center = 0.5 * (cfg.via_offset_min + cfg.via_offset_max);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(sum[k] / n / center[k], 1.0, 0.01);
}

TEST(AugmentationConfig, JsonRoundTripAndStrictKeys) {
    AugmentationConfig c;
    c.object.radius_range = {0.2, 0.4};
    c.camera.rotation_sigma = 0.01;
    c.base_seed = 42;
    nlohmann::json j = c;
    const auto back = augmentation_config_from_json(j);
    EXPECT_EQ(nlohmann::json(back), j);
    j["object"]["radius"] = 1;
    EXPECT_THROW(augmentation_config_from_json(j), ConfigError);
    EXPECT_THROW(augmentation_config_from_json({{"object", {{"radius_range", {0.4, 0.2}}}}}), ConfigError);
    EXPECT_THROW(augmentation_config_from_json({{"object", {{"radius_range", {0.0, 0.2}}}}}), ConfigError);
    EXPECT_THROW(augmentation_config_from_json({{"camera", {{"translation_sigma", -1}}}}), ConfigError);
}
