#pragma once

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/image.hpp"

namespace mfeo {

namespace detail {

// PGM token reader: skips whitespace and '#' comment lines.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
                tok.push_back(static_cast<char>(in.get()));
            }
            return tok;
        }
    }
    return tok;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadCloser() { png_destroy_read_struct(&png, &info, nullptr); }
};

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    const std::string magic = detail::pnm_token(in);
    if (magic != "P5") throw DataError("not a binary PGM (P5): " + path);
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(detail::pnm_token(in));
        height = std::stoi(detail::pnm_token(in));
        maxval = std::stoi(detail::pnm_token(in));
    } catch (const std::exception&) {
        throw DataError("malformed PGM header: " + path);
    }
    if (width < 1 || height < 1) throw DataError("bad PGM dimensions: " + path);
    if (maxval < 1 || maxval > 255) {
        throw DataError("unsupported PGM maxval (only 8-bit supported): " + path);
    }
    in.get();  // single whitespace byte after maxval
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw DataError("truncated PGM payload: " + path);
    }
    GrayImage img(width, height);
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * scale;
    return img;
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = img.data[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("failed writing image: " + path);
}

// 8-bit grayscale or RGB PNG; palette images are expanded, 16-bit depth and
// alpha are stripped.
inline GrayImage read_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open image: " + path);

    detail::PngReadCloser h;
    GrayImage result;
    try {
        h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!h.png) throw DataError("libpng init failed");
        h.info = png_create_info_struct(h.png);
        if (!h.info) throw DataError("libpng init failed");
        if (setjmp(png_jmpbuf(h.png))) throw DataError("malformed PNG: " + path);

        png_init_io(h.png, fp);
        png_read_info(h.png, h.info);

        png_set_strip_16(h.png);
        png_set_strip_alpha(h.png);
        png_set_palette_to_rgb(h.png);
        png_set_expand_gray_1_2_4_to_8(h.png);
        png_read_update_info(h.png, h.info);

        const png_uint_32 width = png_get_image_width(h.png, h.info);
        const png_uint_32 height = png_get_image_height(h.png, h.info);
        const png_byte channels = png_get_channels(h.png, h.info);
        if (channels != 1 && channels != 3) {
            throw DataError("unsupported PNG channel count in " + path);
        }

        std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
        if (channels == 1) {
            result = GrayImage(static_cast<int>(width), static_cast<int>(height));
            for (png_uint_32 y = 0; y < height; ++y) {
                png_read_row(h.png, row.data(), nullptr);
                for (png_uint_32 x = 0; x < width; ++x) {
                    result.at(static_cast<int>(x), static_cast<int>(y)) = row[x] / 255.0;
                }
            }
        } else {
            RgbImage rgb;
            rgb.width = static_cast<int>(width);
            rgb.height = static_cast<int>(height);
            const std::size_t n = static_cast<std::size_t>(width) * height;
            rgb.r.resize(n);
            rgb.g.resize(n);
            rgb.b.resize(n);
            for (png_uint_32 y = 0; y < height; ++y) {
                png_read_row(h.png, row.data(), nullptr);
                for (png_uint_32 x = 0; x < width; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * width + x;
                    rgb.r[i] = row[3 * x + 0] / 255.0;
                    rgb.g[i] = row[3 * x + 1] / 255.0;
                    rgb.b[i] = row[3 * x + 2] / 255.0;
                }
            }
            result = to_grayscale(rgb);
        }
    } catch (...) {
        std::fclose(fp);
        throw;
    }
    std::fclose(fp);
    return result;
}

// Dispatch on the file's magic bytes rather than its extension.
inline GrayImage load_image(const std::string& path) {
    unsigned char magic[2] = {0, 0};
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw DataError("cannot open image: " + path);
        probe.read(reinterpret_cast<char*>(magic), 2);
    }
    if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
    if (magic[0] == 0x89 && magic[1] == 'P') return read_png(path);
    throw DataError("unrecognized image format (expected PNG or binary PGM): " + path);
}

}  // namespace mfeo
