#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/image.hpp"

namespace mfeo::pre {

struct AmfConfig {
    int w_min = 3;
    int w_max = 7;

    void validate(const GrayImage& img) const {
        if (w_min < 3 || w_min % 2 == 0) throw ConfigError("amf: w_min must be odd and >= 3");
        if (w_max < w_min || w_max % 2 == 0) {
            throw ConfigError("amf: w_max must be odd and >= w_min");
        }
        if (w_max > std::min(img.width, img.height)) {
            throw ConfigError("amf: w_max exceeds image side");
        }
    }
};

struct WindowStats {
    double x_min = 0.0;
    double x_med = 0.0;
    double x_max = 0.0;
};

namespace detail {

// Gathers the window clipped to image bounds into buf.
inline void gather_window(const GrayImage& img, int cx, int cy, int side,
                          std::vector<double>& buf) {
    const int r = side / 2;
    const int x0 = std::max(0, cx - r), x1 = std::min(img.width - 1, cx + r);
    const int y0 = std::max(0, cy - r), y1 = std::min(img.height - 1, cy + r);
    buf.clear();
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) buf.push_back(img.at(x, y));
    }
}

// Median convention: lower-middle element, so even-count clipped corner
// windows still yield a value from the input set.
inline WindowStats stats_of(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    return {buf.front(), buf[(buf.size() - 1) / 2], buf.back()};
}

}  // namespace detail

inline WindowStats window_stats(const GrayImage& img, int cx, int cy, int side) {
    if (side % 2 == 0) throw ConfigError("window_stats: window side must be odd");
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(side) * side);
    detail::gather_window(img, cx, cy, side, buf);
    return detail::stats_of(buf);
}

// Two-level adaptive median filter. Level A grows the window from w_min by 2
// per side until the window median is strictly between the window extremes;
// past w_max the pixel becomes the last window's median. Level B keeps the
// pixel when it is strictly between the extremes, else substitutes the median.
inline GrayImage adaptive_median_filter(const GrayImage& img, const AmfConfig& cfg) {
    cfg.validate(img);
    GrayImage out(img.width, img.height);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(cfg.w_max) * cfg.w_max);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double pixel = img.at(x, y);
            double result = pixel;
            for (int side = cfg.w_min;; side += 2) {
                detail::gather_window(img, x, y, side, buf);
                const WindowStats s = detail::stats_of(buf);
                if (s.x_min < s.x_med && s.x_med < s.x_max) {
                    result = (s.x_min < pixel && pixel < s.x_max) ? pixel : s.x_med;
                    break;
                }
                if (side + 2 > cfg.w_max) {
                    result = s.x_med;
                    break;
                }
            }
            out.at(x, y) = result;
        }
    }
    return out;
}

}  // namespace mfeo::pre
