// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// 2D class-mask supervision for feature training. On disk a view is a single-channel 16-bit PNG
// (value = class id, 65535 = unlabeled) plus a JSON sidecar with the camera and id → name map.
//
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "splatforge/core/camera.hpp"
#include "splatforge/core/image.hpp"
#include "splatforge/core/image_io.hpp"
#include "splatforge/scene/gaussian.hpp"

namespace splatforge {

inline constexpr int kUnlabeled = -1;
inline constexpr std::uint16_t kUnlabeledPng = 0xFFFF;

struct SupervisionView {
    CameraModel camera;
    Image<int> mask;                       // W×H class ids, kUnlabeled where unsupervised
    std::map<int, std::string> class_ids;  // id → label_table key

    void validate(const GaussianScene& scene) const {
        if (mask.width != camera.width || mask.height != camera.height || mask.channels != 1)
            throw ValidationError("mask", "mask dimensions do not match the camera");
        for (const auto& [id, name] : class_ids) {
            if (id < 0) throw ValidationError("class_ids", "class ids must be non-negative");
            if (!scene.label_table.count(name)) throw ValidationError("class_ids", "class '" + name + "' not in label table");
        }
        for (const int v : mask.data)
            if (v != kUnlabeled && !class_ids.count(v))
                throw ValidationError("mask", "mask id " + std::to_string(v) + " has no class name");
    }
};

inline void save_supervision_view(const SupervisionView& v, const std::filesystem::path& png_path) {
    Image16 m(v.mask.width, v.mask.height, 1);
    for (std::size_t i = 0; i < v.mask.data.size(); ++i) {
        const int id = v.mask.data[i];
        if (id != kUnlabeled && (id < 0 || id >= kUnlabeledPng))
            throw ValidationError("mask", "class id out of 16-bit range: " + std::to_string(id));
        m.data[i] = id == kUnlabeled ? kUnlabeledPng : static_cast<std::uint16_t>(id);
    }
    write_png16(png_path, m);
    nlohmann::json side;
    side["camera"] = v.camera;
    side["unlabeled"] = kUnlabeledPng;
    for (const auto& [id, name] : v.class_ids) side["classes"][std::to_string(id)] = name;
    std::filesystem::path sidecar = png_path;
    sidecar.replace_extension(".json");
    std::ofstream f(sidecar);
    if (!f) throw IoError("cannot write " + sidecar.string());
    f << side.dump(2) << "\n";
}

inline SupervisionView load_supervision_view(const std::filesystem::path& png_path) {
    std::filesystem::path sidecar = png_path;
    sidecar.replace_extension(".json");
    std::ifstream f(sidecar);
    if (!f) throw IoError("cannot open " + sidecar.string());
    nlohmann::json side;
    SupervisionView v;
    try {
        f >> side;
        v.camera = side.at("camera").get<CameraModel>();
        if (side.contains("classes"))
            for (auto it = side["classes"].begin(); it != side["classes"].end(); ++it)
                v.class_ids[std::stoi(it.key())] = it.value().get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(sidecar.string(), "", e.what());
    } catch (const std::invalid_argument&) {
        throw ParseError(sidecar.string(), "classes", "class ids must be integers");
    }
    const Image16 m = read_png16(png_path);
    v.mask = Image<int>(m.width, m.height, 1);
    for (std::size_t i = 0; i < m.data.size(); ++i) v.mask.data[i] = m.data[i] == kUnlabeledPng ? kUnlabeled : m.data[i];
    return v;
}

}  // namespace splatforge
