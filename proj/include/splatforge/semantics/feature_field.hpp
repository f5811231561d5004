// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Per-splat semantic features trained against class text embeddings. A pixel's feature is
// F = Σ_i w_i f_i with the photometric blending weights w_i held fixed; the per-pixel loss is
// softmax cross-entropy over cos(F, e_k) / τ for all classes k in the label table.
//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatforge/core/log.hpp"
#include "splatforge/core/random.hpp"
#include "splatforge/render/rasterizer.hpp"
#include "splatforge/semantics/supervision.hpp"

namespace splatforge {

struct FeatureTrainConfig {
    double learning_rate = 0.05;  // Adam step size
    int iterations = 500;
    double temperature = 0.07;
    int batch_pixels = 4096;
    std::uint64_t seed = 0;
    int eval_every = 50;  // full-batch loss evaluation period; 0 disables
    RenderOptions render;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("features.learning_rate must be positive");
        if (iterations <= 0) throw ConfigError("features.iterations must be positive");
        if (!(temperature > 0)) throw ConfigError("features.temperature must be positive");
        if (batch_pixels <= 0) throw ConfigError("features.batch_pixels must be positive");
        if (eval_every < 0) throw ConfigError("features.eval_every must be non-negative");
    }
};

struct FeatureTrainReport {
    std::vector<std::pair<int, double>> loss_trace;  // (iteration, full-batch loss)
};

/// cos(a, b); 0 when either vector is zero.
inline double cosine_similarity(const VecX& a, const VecX& b) {
    const double n = a.norm() * b.norm();
    return n > 0 ? a.dot(b) / n : 0.0;
}

namespace detail {

struct LabelBasis {
    std::vector<std::string> names;
    Eigen::MatrixXd E;  // K×d, unit rows
};

inline LabelBasis label_basis(const GaussianScene& scene) {
    if (scene.label_table.empty()) throw ValidationError("label_table", "empty label table");
    LabelBasis b;
    b.E.resize(static_cast<Eigen::Index>(scene.label_table.size()), scene.feature_dim);
    Eigen::Index k = 0;
    for (const auto& [name, e] : scene.label_table) {
        if (e.size() != scene.feature_dim)
            throw ValidationError("label_table." + name, "embedding length " + std::to_string(e.size()) +
                                                             " does not match feature_dim " + std::to_string(scene.feature_dim));
        if (std::abs(e.norm() - 1.0) > 1e-6) throw ValidationError("label_table." + name, "embedding must be unit norm");
        b.names.push_back(name);
        b.E.row(k++) = e.transpose();
    }
    return b;
}

inline int class_index(const LabelBasis& b, const std::string& name) {
    const auto it = std::find(b.names.begin(), b.names.end(), name);
    if (it == b.names.end()) throw ValidationError("class", "unknown class '" + name + "'");
    return static_cast<int>(it - b.names.begin());
}

struct LabeledPixel {
    std::uint32_t view;
    std::uint32_t pixel;
    std::uint32_t label;  // row of LabelBasis::E
};

// Loss at one pixel and dL/dF. F is the blended feature.
inline double pixel_loss(const VecX& F, const Eigen::MatrixXd& E, int y, double tau, VecX* dF) {
    const double n = F.norm();
    const Eigen::VectorXd dots = E * F;
    const Eigen::VectorXd cosv = n > 0 ? Eigen::VectorXd(dots / n) : Eigen::VectorXd::Zero(E.rows());
    const Eigen::VectorXd z = cosv / tau;
    const double zmax = z.maxCoeff();
    const Eigen::VectorXd ez = (z.array() - zmax).exp();
    const double sum = ez.sum();
    const double loss = -(z[y] - zmax) + std::log(sum);
    if (dF) {
        dF->setZero(F.size());
        if (n > 0) {
            // dL/dcos_k = (p_k − [k = y]) / τ;  dcos_k/dF = (e_k − cos_k F/‖F‖) / ‖F‖
            for (Eigen::Index k = 0; k < E.rows(); ++k) {
                const double g = (ez[k] / sum - (k == y ? 1.0 : 0.0)) / tau;
                *dF += g * (E.row(k).transpose() - cosv[k] * F / n) / n;
            }
        }
    }
    return loss;
}

struct FeatureProblem {
    LabelBasis basis;
    std::vector<BlendWeights> weights;
    std::vector<LabeledPixel> pixels;
};

inline FeatureProblem build_feature_problem(const GaussianScene& scene, const std::vector<SupervisionView>& views,
                                            const RenderOptions& opts) {
    FeatureProblem p;
    p.basis = label_basis(scene);
    for (std::size_t v = 0; v < views.size(); ++v) {
        const auto& view = views[v];
        view.validate(scene);
        std::map<int, int> id_to_label;
        for (const auto& [id, name] : view.class_ids) id_to_label[id] = class_index(p.basis, name);
        p.weights.push_back(collect_blend_weights(scene, view.camera, opts));
        for (std::size_t i = 0; i < view.mask.data.size(); ++i) {
            const int id = view.mask.data[i];
            if (id == kUnlabeled) continue;
            p.pixels.push_back({static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(i),
                                static_cast<std::uint32_t>(id_to_label.at(id))});
        }
    }
    if (p.pixels.empty()) throw ValidationError("views", "zero labeled pixels");
    return p;
}

inline VecX blended_feature(const BlendWeights& bw, std::uint32_t pixel, const Eigen::MatrixXd& f) {
    VecX F = VecX::Zero(f.cols());
    for (std::size_t k = bw.offsets[pixel]; k < bw.offsets[pixel + 1]; ++k) F += bw.weight[k] * f.row(bw.splat[k]).transpose();
    return F;
}

inline double full_batch_loss(const FeatureProblem& p, const Eigen::MatrixXd& f, double tau) {
    std::vector<double> per(p.pixels.size());
    parallel_for(p.pixels.size(), 0, [&](std::size_t i) {
        const auto& px = p.pixels[i];
        per[i] = pixel_loss(blended_feature(p.weights[px.view], px.pixel, f), p.basis.E, static_cast<int>(px.label), tau, nullptr);
    });
    double s = 0;
    for (const double l : per) s += l;
    return s / static_cast<double>(per.size());
}

inline Eigen::MatrixXd feature_matrix(const GaussianScene& scene) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(scene.size()), scene.feature_dim);
    for (std::size_t i = 0; i < scene.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = scene.splats[i].feature.transpose();
    return f;
}

}  // namespace detail

/// Mean per-pixel contrastive loss over all labeled pixels of `views`.
inline double semantic_loss(const GaussianScene& scene, const std::vector<SupervisionView>& views, double temperature,
                            const RenderOptions& opts = {}) {
    const auto p = detail::build_feature_problem(scene, views, opts);
    return detail::full_batch_loss(p, detail::feature_matrix(scene), temperature);
}

/// Trains features with minibatch Adam (lazy: only rows touched by a batch are updated).
/// Geometry, opacity and SH are copied bit-for-bit.
inline GaussianScene train_features(const GaussianScene& scene, const std::vector<SupervisionView>& views,
                                    const FeatureTrainConfig& cfg, FeatureTrainReport* report = nullptr) {
    cfg.validate();
    if (scene.feature_dim < 2) throw ValidationError("feature_dim", "feature training needs d >= 2");
    const auto p = detail::build_feature_problem(scene, views, cfg.render);
    const Eigen::MatrixXd& E = p.basis.E;

    Eigen::MatrixXd f = detail::feature_matrix(scene);
    if (f.size() > 0 && f.isZero(0.0)) {
        // All-zero features have no direction; start from a seeded random field.
        Philox rng = Philox::stream(cfg.seed, "feature-init");
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal(0.0, 0.1);
        log::info("train_features: zero features, using seeded random initialization");
    }

    const Eigen::Index n = f.rows(), d = f.cols();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, d), v = Eigen::MatrixXd::Zero(n, d), grad = Eigen::MatrixXd::Zero(n, d);
    std::vector<int> steps(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> touched(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> touched_rows;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double tau = cfg.temperature;

    auto record = [&](int it) {
        if (report) report->loss_trace.emplace_back(it, detail::full_batch_loss(p, f, tau));
    };
    if (cfg.eval_every > 0) record(0);

    VecX dF;
    for (int it = 1; it <= cfg.iterations; ++it) {
        Philox rng = Philox::stream(cfg.seed, "feature-batch", static_cast<std::uint64_t>(it));
        const double inv_b = 1.0 / cfg.batch_pixels;
        for (int b = 0; b < cfg.batch_pixels; ++b) {
            const auto& px = p.pixels[rng.below(p.pixels.size())];
            const auto& bw = p.weights[px.view];
            detail::pixel_loss(detail::blended_feature(bw, px.pixel, f), E, static_cast<int>(px.label), tau, &dF);
            for (std::size_t k = bw.offsets[px.pixel]; k < bw.offsets[px.pixel + 1]; ++k) {
                const Eigen::Index row = bw.splat[k];
                grad.row(row) += (inv_b * bw.weight[k]) * dF.transpose();
                if (!touched[static_cast<std::size_t>(row)]) {
                    touched[static_cast<std::size_t>(row)] = 1;
                    touched_rows.push_back(row);
                }
            }
        }
        std::sort(touched_rows.begin(), touched_rows.end());
        for (const Eigen::Index row : touched_rows) {
            const int t = ++steps[static_cast<std::size_t>(row)];
            m.row(row) = b1 * m.row(row) + (1 - b1) * grad.row(row);
            v.row(row) = b2 * v.row(row) + (1 - b2) * grad.row(row).cwiseAbs2();
            const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
            f.row(row).array() -= cfg.learning_rate * (m.row(row).array() / c1) / ((v.row(row).array() / c2).sqrt() + eps);
            grad.row(row).setZero();
            touched[static_cast<std::size_t>(row)] = 0;
        }
        touched_rows.clear();
        if (cfg.eval_every > 0 && (it % cfg.eval_every == 0 || it == cfg.iterations)) record(it);
    }

    GaussianScene out = scene;
    for (Eigen::Index i = 0; i < n; ++i) out.splats[static_cast<std::size_t>(i)].feature = f.row(i).transpose();
    return out;
}

/// Per-pixel argmax class (index into the sorted label-table names) where alpha > 0.5, else -1.
inline Image<int> argmax_class_mask(const GaussianScene& scene, const CameraModel& cam, const RenderOptions& opts = {}) {
    const auto basis = detail::label_basis(scene);
    RenderOptions o = opts;
    o.render_features = true;
    const auto out = rasterize(scene, cam, o);
    Image<int> m(cam.width, cam.height, 1, -1);
    const int d = scene.feature_dim;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            if (!(out.alpha.at(x, y) > 0.5)) continue;
            const VecX F = Eigen::Map<const VecX>(&out.feature.at(x, y, 0), d);
            Eigen::Index best;
            (basis.E * F).maxCoeff(&best);
            m.at(x, y) = static_cast<int>(best);
        }
    return m;
}

/// Pixels whose rendered feature has cos ≥ threshold with the class embedding and alpha > 0.5.
inline Mask query_mask(const GaussianScene& scene, const CameraModel& cam, const std::string& class_name, double threshold,
                       const RenderOptions& opts = {}) {
    const auto it = scene.label_table.find(class_name);
    if (it == scene.label_table.end()) throw ValidationError("class", "unknown class '" + class_name + "'");
    RenderOptions o = opts;
    o.render_features = true;
    const auto out = rasterize(scene, cam, o);
    Mask m(cam.width, cam.height, 1);
    const int d = scene.feature_dim;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const VecX F = Eigen::Map<const VecX>(&out.feature.at(x, y, 0), d);
            m.at(x, y) = out.alpha.at(x, y) > 0.5 && cosine_similarity(F, it->second) >= threshold;
        }
    return m;
}

struct ClassSelection {
    std::vector<std::size_t> indices;
    std::vector<Vec3> points;  // scene frame
};

/// Splats whose own feature has cos ≥ threshold with the class embedding.
inline ClassSelection extract_splats_by_class(const GaussianScene& scene, const std::string& class_name, double threshold) {
    const auto it = scene.label_table.find(class_name);
    if (it == scene.label_table.end()) throw ValidationError("class", "unknown class '" + class_name + "'");
    ClassSelection sel;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (cosine_similarity(scene.splats[i].feature, it->second) >= threshold) {
            sel.indices.push_back(i);
            sel.points.push_back(scene.splats[i].position);
        }
    return sel;
}

}  // namespace splatforge
