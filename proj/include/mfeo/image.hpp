#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mfeo/common.hpp"

namespace mfeo {

// Row-major grayscale image, intensities in [0,1] for all computation.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }

    bool valid() const {
        if (width < 3 || height < 3) return false;
        if (data.size() != static_cast<std::size_t>(width) * height) return false;
        for (double v : data) {
            if (!(v >= 0.0 && v <= 1.0)) return false;
        }
        return true;
    }
};

// Planar RGB, same layout and unit range as GrayImage.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> r, g, b;
};

// ITU-R 601 luma weights; they sum to 1 so the unit range is preserved.
inline GrayImage to_grayscale(const RgbImage& rgb) {
    const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
    if (rgb.r.size() != n || rgb.g.size() != n || rgb.b.size() != n) {
        throw DataError("to_grayscale: channel sizes do not match image dimensions");
    }
    GrayImage out(rgb.width, rgb.height);
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i] = 0.299 * rgb.r[i] + 0.587 * rgb.g[i] + 0.114 * rgb.b[i];
    }
    return out;
}

// Endpoint-preserving bilinear resampling: source coordinate of output pixel
// x is x*(W-1)/(w-1), so identical dimensions reproduce the input exactly and
// every output value is a convex combination of input values.
inline GrayImage resize_bilinear(const GrayImage& img, int w, int h) {
    if (w < 2 || h < 2) {
        throw DataError("resize_bilinear: target dimensions must be at least 2x2");
    }
    if (img.width == w && img.height == h) return img;

    GrayImage out(w, h);
    const double sx = static_cast<double>(img.width - 1) / (w - 1);
    const double sy = static_cast<double>(img.height - 1) / (h - 1);
    for (int y = 0; y < h; ++y) {
        const double fy = y * sy;
        int y0 = static_cast<int>(fy);
        if (y0 > img.height - 2) y0 = img.height - 2;
        const double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = x * sx;
            int x0 = static_cast<int>(fx);
            if (x0 > img.width - 2) x0 = img.width - 2;
            const double tx = fx - x0;
            const double v00 = img.at(x0, y0);
            const double v10 = img.at(x0 + 1, y0);
            const double v01 = img.at(x0, y0 + 1);
            const double v11 = img.at(x0 + 1, y0 + 1);
            out.at(x, y) = (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) +
                           ty * ((1.0 - tx) * v01 + tx * v11);
        }
    }
    return out;
}

}  // namespace mfeo
