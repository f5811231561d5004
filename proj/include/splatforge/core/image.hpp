// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "splatforge/core/error.hpp"

namespace splatforge {

/// Interleaved row-major image.
template <class T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const { return data.empty(); }
    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    friend bool operator==(const Image&, const Image&) = default;
};

using ImageD = Image<double>;
using Image8 = Image<std::uint8_t>;
using Image16 = Image<std::uint16_t>;
using Mask = Image<std::uint8_t>;  // 0/1 per pixel, one channel

/// 2x2 box downsample; odd trailing rows/cols are dropped.
inline ImageD downsample_box2(const ImageD& in) {
    ImageD out(std::max(1, in.width / 2), std::max(1, in.height / 2), in.channels);
    if (in.width < 2 || in.height < 2) return in;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(x, y, c) = 0.25 * (in.at(2 * x, 2 * y, c) + in.at(2 * x + 1, 2 * y, c) +
                                          in.at(2 * x, 2 * y + 1, c) + in.at(2 * x + 1, 2 * y + 1, c));
    return out;
}

inline Image8 to_8bit(const ImageD& in) {
    Image8 out(in.width, in.height, in.channels);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(in.data[i], 0.0, 1.0) * 255.0));
    return out;
}

inline ImageD from_8bit(const Image8& in) {
    ImageD out(in.width, in.height, in.channels);
    for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] / 255.0;
    return out;
}

}  // namespace splatforge
