// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// PNG (8/16-bit, gray or RGB) through libpng, and float32 PFM.
//
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "splatforge/core/error.hpp"
#include "splatforge/core/image.hpp"

namespace splatforge {

namespace detail {

struct PngWriteBuffer {
    std::vector<std::uint8_t>* out;
};

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->out->insert(buf->out->end(), data, data + len);
}

inline void png_flush_noop(png_structp) {}

inline int png_color_type(int channels) {
    switch (channels) {
        case 1: return PNG_COLOR_TYPE_GRAY;
        case 3: return PNG_COLOR_TYPE_RGB;
        case 4: return PNG_COLOR_TYPE_RGBA;
        default: throw ValidationError("image.channels", "PNG supports 1, 3 or 4 channels");
    }
}

// Encodes rows of `bit_depth` samples (8 or 16, big-endian for 16 as PNG requires).
template <class T>
std::vector<std::uint8_t> encode_png(const Image<T>& img, int bit_depth) {
    if (img.width <= 0 || img.height <= 0) throw ValidationError("image.size", "cannot encode an empty image");
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    const std::size_t bytes_per_sample = bit_depth / 8;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels * bytes_per_sample);
    PngWriteBuffer buf{&out};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng encode error");
    }
    png_set_write_fn(png, &buf, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, img.width, img.height, bit_depth, png_color_type(img.channels), PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Fixed settings so identical pixels always encode to identical bytes.
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        for (int i = 0; i < img.width * img.channels; ++i) {
            const auto v = static_cast<std::uint32_t>(img.data[static_cast<std::size_t>(y) * img.width * img.channels + i]);
            if (bytes_per_sample == 1) {
                row[i] = static_cast<std::uint8_t>(v);
            } else {
                row[2 * i] = static_cast<std::uint8_t>(v >> 8);
                row[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

struct PngDecoded {
    int width = 0, height = 0, channels = 0, bit_depth = 0;
    std::vector<std::uint16_t> samples;
};

inline PngDecoded decode_png_file(const std::filesystem::path& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
    if (!fp) throw IoError("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw ParseError(path.string(), "", "not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    PngDecoded d;
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path.string(), "", "libpng decode error");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && d.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    d.channels = png_get_channels(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * d.height);
    rows.resize(d.height);
    for (int y = 0; y < d.height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    d.samples.resize(static_cast<std::size_t>(d.width) * d.height * d.channels);
    for (std::size_t i = 0; i < d.samples.size(); ++i)
        d.samples[i] = d.bit_depth == 16 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    return d;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const Image8& img) { return detail::encode_png(img, 8); }
inline std::vector<std::uint8_t> encode_png16(const Image16& img) { return detail::encode_png(img, 16); }

inline void write_png(const std::filesystem::path& path, const Image8& img) {
    detail::write_bytes(path, encode_png(img));
}
inline void write_png16(const std::filesystem::path& path, const Image16& img) {
    detail::write_bytes(path, encode_png16(img));
}

inline Image8 read_png(const std::filesystem::path& path) {
    auto d = detail::decode_png_file(path);
    if (d.bit_depth != 8) throw ParseError(path.string(), "", "expected an 8-bit PNG");
    Image8 img(d.width, d.height, d.channels);
    for (std::size_t i = 0; i < d.samples.size(); ++i) img.data[i] = static_cast<std::uint8_t>(d.samples[i]);
    return img;
}

/// Reads a single-channel PNG of 8 or 16 bits into 16-bit samples.
inline Image16 read_png16(const std::filesystem::path& path) {
    auto d = detail::decode_png_file(path);
    if (d.channels != 1) throw ParseError(path.string(), "", "expected a single-channel PNG");
    Image16 img(d.width, d.height, 1);
    img.data = std::move(d.samples);
    return img;
}

/// Portable float map; 1 channel ("Pf") or 3 channels ("PF"), little-endian, rows stored bottom-up.
inline void write_pfm(const std::filesystem::path& path, const ImageD& img) {
    if (img.channels != 1 && img.channels != 3) throw ValidationError("image.channels", "PFM needs 1 or 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int i = 0; i < img.width * img.channels; ++i)
            row[i] = static_cast<float>(img.data[static_cast<std::size_t>(y) * img.width * img.channels + i]);
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw IoError("write failed: " + path.string());
}

inline ImageD read_pfm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0;
    double scale = 0;
    f >> magic >> w >> h >> scale;
    f.get();
    if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0)
        throw ParseError(path.string(), "header", "malformed PFM header");
    if (scale > 0) throw ParseError(path.string(), "scale", "big-endian PFM is not supported");
    const int ch = magic == "PF" ? 3 : 1;
    ImageD img(w, h, ch);
    std::vector<float> row(static_cast<std::size_t>(w) * ch);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw ParseError(path.string(), "data", "truncated PFM");
        for (int i = 0; i < w * ch; ++i) img.data[static_cast<std::size_t>(y) * w * ch + i] = row[i];
    }
    return img;
}

/// Loads an image as doubles in [0,1] from .png (8-bit) or .pfm.
inline ImageD read_image(const std::filesystem::path& path) {
    if (path.extension() == ".pfm") return read_pfm(path);
    return from_8bit(read_png(path));
}

inline void write_image(const std::filesystem::path& path, const ImageD& img) {
    if (path.extension() == ".pfm")
        write_pfm(path, img);
    else
        write_png(path, to_8bit(img));
}

}  // namespace splatforge
