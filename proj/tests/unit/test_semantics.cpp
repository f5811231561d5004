// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <filesystem>

#include "splatforge/semantics/feature_field.hpp"
#include "support/two_cluster.hpp"

using namespace splatforge;
namespace tsup = splatforge::test_support;

namespace {

GaussianScene with_class_features(const tsup::TwoCluster& tc) {
    GaussianScene s = tc.scene;
    for (std::size_t i = 0; i < s.size(); ++i) s.splats[i].feature = s.label_table.at(tc.names[tc.blob_of[i]]);
    return s;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
    // Reference values for Philox4x32-10.
    using B = Philox::Block;
    EXPECT_EQ(Philox::round10(B{0, 0, 0, 0}, {0, 0}), (B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox::round10(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox::round10(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
    auto a = Philox::stream(7, "x", 3), b = Philox::stream(7, "x", 3), c = Philox::stream(7, "x", 4), d = Philox::stream(7, "y", 3);
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
    EXPECT_NE(va, d.next_u64());
}

TEST(Philox, UniformMoments) {
    auto r = Philox::stream(1, "moments");
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 0.005);
    EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(SupervisionIo, RoundTripThroughPng16AndSidecar) {
    const auto tc = tsup::make_two_cluster(1, 4, 20, 24, 1);
    auto view = tc.views[0];
    view.mask.at(0, 0) = kUnlabeled;
    const auto dir = std::filesystem::temp_directory_path() / "splatforge_tests";
    std::filesystem::create_directories(dir);
    save_supervision_view(view, dir / "view0.png");
    const auto back = load_supervision_view(dir / "view0.png");
    EXPECT_EQ(back.mask.data, view.mask.data);
    EXPECT_EQ(back.class_ids, view.class_ids);
    EXPECT_EQ(back.camera.width, view.camera.width);
    EXPECT_NO_THROW(back.validate(tc.scene));
}

TEST(FeatureTraining, TwoClusterReachesHighIoU) {
    const auto tc = tsup::make_two_cluster(2);
    FeatureTrainConfig cfg;
    cfg.iterations = 500;
    cfg.seed = 5;
    FeatureTrainReport rep;
    const auto trained = train_features(tc.scene, tc.views, cfg, &rep);
    for (const auto& v : tc.views) {
        const auto pred = argmax_class_mask(trained, v.camera);
        for (int c = 0; c < 2; ++c) EXPECT_GT(tsup::class_iou(pred, v.mask, c), 0.9);
    }
    // Full-batch loss evaluated every 50 iterations never increases (1e-6 slack).
    ASSERT_GE(rep.loss_trace.size(), 10u);
    for (std::size_t i = 1; i < rep.loss_trace.size(); ++i)
        EXPECT_LE(rep.loss_trace[i].second, rep.loss_trace[i - 1].second + 1e-6) << "at iteration " << rep.loss_trace[i].first;
    // Only features change.
    for (std::size_t i = 0; i < tc.scene.size(); ++i) {
        auto a = tc.scene.splats[i], b = trained.splats[i];
        a.feature = b.feature;
        EXPECT_TRUE(bitwise_equal(a, b));
    }
    // Splat selection recovers blob membership.
    for (int c = 0; c < 2; ++c) {
        const auto sel = extract_splats_by_class(trained, tc.names[c], 0.5);
        std::size_t spurious = 0, hits = 0;
        for (const auto i : sel.indices) (tc.blob_of[i] == static_cast<std::size_t>(c) ? hits : spurious)++;
        EXPECT_LE(static_cast<double>(spurious), 0.02 * static_cast<double>(sel.indices.size()));
        EXPECT_GT(hits, 0u);
    }
    // query_mask agrees with the argmax oracle where the cosine clears the threshold.
    const auto& cam = tc.views[0].camera;
    const auto argmax = argmax_class_mask(trained, cam);
    for (int c = 0; c < 2; ++c) {
        const auto q = query_mask(trained, cam, tc.names[c], 0.7);
        for (std::size_t i = 0; i < q.data.size(); ++i)
            if (q.data[i]) EXPECT_EQ(argmax.data[i], c);
    }
}

TEST(FeatureTraining, AlignedFeaturesAreNearStationary) {
    const auto tc = tsup::make_two_cluster(3, 8, 60, 32, 2);
    const auto aligned = with_class_features(tc);
    const double l0 = semantic_loss(aligned, tc.views, 0.07);
    tsup::Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        auto noisy = aligned;
        for (auto& g : noisy.splats)
            for (int k = 0; k < g.feature.size(); ++k) g.feature[k] += tsup::uniform(rng, -0.5, 0.5);
        EXPECT_LE(l0, semantic_loss(noisy, tc.views, 0.07));
    }
    FeatureTrainConfig cfg;
    cfg.iterations = 1;
    cfg.learning_rate = 1e-9;
    const auto stepped = train_features(aligned, tc.views, cfg);
    for (std::size_t i = 0; i < aligned.size(); ++i)
        EXPECT_LT((stepped.splats[i].feature - aligned.splats[i].feature).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FeatureTraining, Errors) {
    auto tc = tsup::make_two_cluster(4, 4, 10, 16, 1);
    FeatureTrainConfig cfg;
    cfg.iterations = 1;
    auto unlabeled = tc.views;
    for (auto& v : unlabeled.front().mask.data) v = kUnlabeled;
    try {
        train_features(tc.scene, unlabeled, cfg);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("zero labeled pixels"), std::string::npos);
    }
    auto empty = tc.scene;
    empty.label_table.clear();
    EXPECT_THROW(train_features(empty, tc.views, cfg), ValidationError);
    auto bad_d = tc.scene;
    bad_d.label_table.begin()->second = VecX::Unit(5, 0);
    EXPECT_THROW(train_features(bad_d, tc.views, cfg), ValidationError);
}

TEST(QueryMask, UniformFeaturesAndThresholds) {
    auto tc = tsup::make_two_cluster(5, 4, 40, 32, 1);
    auto s = tc.scene;
    const VecX e = s.label_table.at(tc.names[0]);
    for (auto& g : s.splats) g.feature = e;
    const auto& cam = tc.views[0].camera;
    const auto alpha = rasterize(s, cam).alpha;
    const auto m = query_mask(s, cam, tc.names[0], 0.99);
    for (std::size_t i = 0; i < m.data.size(); ++i) EXPECT_EQ(m.data[i] != 0, alpha.data[i] > 0.5);
    const auto none = query_mask(s, cam, tc.names[0], 1.0 + 1e-9);
    for (const auto v : none.data) EXPECT_EQ(v, 0);
    // Monotone in threshold.
    tsup::Rng rng(2);
    for (auto& g : s.splats)
        for (int k = 0; k < g.feature.size(); ++k) g.feature[k] = tsup::uniform(rng, -1, 1);
    Mask prev = query_mask(s, cam, tc.names[0], -1.0);
    for (double t = -0.8; t <= 1.0; t += 0.2) {
        const auto cur = query_mask(s, cam, tc.names[0], t);
        for (std::size_t i = 0; i < cur.data.size(); ++i) EXPECT_LE(cur.data[i], prev.data[i]);
        prev = cur;
    }
    EXPECT_THROW(query_mask(s, cam, "nope", 0.5), ValidationError);
}

TEST(ExtractSplats, UniformAndOrthogonal) {
    auto tc = tsup::make_two_cluster(6, 4, 10, 16, 1);
    for (auto& g : tc.scene.splats) g.feature = tc.scene.label_table.at(tc.names[0]);
    EXPECT_EQ(extract_splats_by_class(tc.scene, tc.names[0], 0.9).indices.size(), tc.scene.size());
    EXPECT_TRUE(extract_splats_by_class(tc.scene, tc.names[1], 0.5).indices.empty());
    EXPECT_THROW(extract_splats_by_class(tc.scene, "nope", 0.5), ValidationError);
}
