#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/image.hpp"

namespace mfeo::feat {

constexpr double kPi = 3.14159265358979323846;

struct FeatureSegment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct FeatureSchema {
    std::vector<FeatureSegment> segments;

    std::size_t total_length() const {
        std::size_t n = 0;
        for (const auto& s : segments) n += s.length;
        return n;
    }

    bool operator==(const FeatureSchema& other) const {
        if (segments.size() != other.segments.size()) return false;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (segments[i].name != other.segments[i].name ||
                segments[i].offset != other.segments[i].offset ||
                segments[i].length != other.segments[i].length)
                return false;
        }
        return true;
    }

    const FeatureSegment& find(const std::string& name) const {
        for (const auto& s : segments) {
            if (s.name == name) return s;
        }
        throw DataError("feature schema has no segment '" + name + "'");
    }
};

struct FeatureVector {
    std::vector<double> values;
    FeatureSchema schema;

    std::vector<double> segment(const std::string& name) const {
        const auto& s = schema.find(name);
        return {values.begin() + static_cast<std::ptrdiff_t>(s.offset),
                values.begin() + static_cast<std::ptrdiff_t>(s.offset + s.length)};
    }
};

inline double euclidean_distance(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) {
        throw DataError("euclidean_distance: vectors must be nonempty and equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = y[i] - x[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

// Per-pixel neutral-vs-expression differencing. distance is the 1-D
// Euclidean distance |expr - neutral|; a pixel is a landmark when its
// distance exceeds eps (eps = 0 marks every changed pixel).
struct LandmarkMap {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> mask;
    std::vector<double> distances;
};

inline LandmarkMap landmark_map(const GrayImage& neutral, const GrayImage& expr, double eps) {
    if (neutral.width != expr.width || neutral.height != expr.height) {
        throw DataError("landmark_map: image dimensions must match");
    }
    LandmarkMap map;
    map.width = neutral.width;
    map.height = neutral.height;
    map.distances.resize(neutral.size());
    map.mask.resize(neutral.size());
    for (std::size_t i = 0; i < neutral.size(); ++i) {
        const double d = std::abs(expr.data[i] - neutral.data[i]);
        map.distances[i] = d;
        map.mask[i] = d > eps ? 1 : 0;
    }
    return map;
}

// g x g grid of masked-distance means (sum of landmark distances in the cell
// divided by the cell's pixel count), then global landmark fraction and the
// global masked-distance mean. Length g*g + 2.
inline std::vector<double> geometric_features(const LandmarkMap& map, int g) {
    if (g < 1) throw ConfigError("geometric_features: grid must be >= 1");
    if (g > map.width || g > map.height) {
        throw ConfigError("geometric_features: grid larger than image side");
    }
    std::vector<double> cell_sum(static_cast<std::size_t>(g) * g, 0.0);
    std::vector<double> cell_pixels(static_cast<std::size_t>(g) * g, 0.0);
    std::size_t landmarks = 0;
    double total = 0.0;
    for (int y = 0; y < map.height; ++y) {
        const int cy = y * g / map.height;
        for (int x = 0; x < map.width; ++x) {
            const int cx = x * g / map.width;
            const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
            const std::size_t c = static_cast<std::size_t>(cy) * g + cx;
            cell_pixels[c] += 1.0;
            if (map.mask[i]) {
                cell_sum[c] += map.distances[i];
                total += map.distances[i];
                ++landmarks;
            }
        }
    }
    std::vector<double> out;
    out.reserve(cell_sum.size() + 2);
    for (std::size_t c = 0; c < cell_sum.size(); ++c) out.push_back(cell_sum[c] / cell_pixels[c]);
    const double n = static_cast<double>(map.width) * map.height;
    out.push_back(static_cast<double>(landmarks) / n);
    out.push_back(total / n);
    return out;
}

struct LbpConfig {
    // 8 neighbors, S(x) = 1 iff x >= 0; fixed so codes stay in [0,255]
    static constexpr int neighbors = 8;
};

// Neighbor order is clockwise from the top-left corner; bit i carries 2^i.
// Index pairs are (dx, dy) offsets from the patch center.
constexpr int kLbpOffsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {1, 0},
                                   {1, 1},   {0, 1},  {-1, 1}, {-1, 0}};

// patch is 9 values row-major (3x3), center at index 4.
inline int lbp_code(const std::vector<double>& patch, const LbpConfig& = {}) {
    if (patch.size() != 9) throw DataError("lbp_code: patch must be exactly 3x3");
    const double center = patch[4];
    int code = 0;
    for (int i = 0; i < 8; ++i) {
        const int x = kLbpOffsets[i][0] + 1;
        const int y = kLbpOffsets[i][1] + 1;
        if (patch[static_cast<std::size_t>(y) * 3 + x] - center >= 0.0) code |= 1 << i;
    }
    return code;
}

// Normalized 256-bin histogram of LBP codes over interior pixels.
inline std::vector<double> lbp_histogram(const GrayImage& img, const LbpConfig& cfg = {}) {
    if (img.width < 3 || img.height < 3) throw DataError("lbp_histogram: image must be >= 3x3");
    std::vector<double> hist(256, 0.0);
    std::size_t count = 0;
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            const double center = img.at(x, y);
            int code = 0;
            for (int i = 0; i < 8; ++i) {
                const double n = img.at(x + kLbpOffsets[i][0], y + kLbpOffsets[i][1]);
                if (n - center >= 0.0) code |= 1 << i;
            }
            hist[static_cast<std::size_t>(code)] += 1.0;
            ++count;
        }
    }
    (void)cfg;
    for (double& h : hist) h /= static_cast<double>(count);
    return hist;
}

struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> gh, gv, magnitude, direction;
};

// Central differences in the interior, one-sided at the borders. Direction is
// arctan(gv/gh) in (-pi/2, pi/2], with pi/2 for vertical edges and 0 for flat
// pixels.
inline GradientField gradients(const GrayImage& img) {
    if (img.width < 3 || img.height < 3) throw DataError("gradients: image must be >= 3x3");
    GradientField f;
    f.width = img.width;
    f.height = img.height;
    const std::size_t n = img.size();
    f.gh.resize(n);
    f.gv.resize(n);
    f.magnitude.resize(n);
    f.direction.resize(n);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double gh;
            if (x == 0) {
                gh = img.at(1, y) - img.at(0, y);
            } else if (x == img.width - 1) {
                gh = img.at(x, y) - img.at(x - 1, y);
            } else {
                gh = (img.at(x + 1, y) - img.at(x - 1, y)) / 2.0;
            }
            double gv;
            if (y == 0) {
                gv = img.at(x, 1) - img.at(x, 0);
            } else if (y == img.height - 1) {
                gv = img.at(x, y) - img.at(x, y - 1);
            } else {
                gv = (img.at(x, y + 1) - img.at(x, y - 1)) / 2.0;
            }
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            f.gh[i] = gh;
            f.gv[i] = gv;
            f.magnitude[i] = std::sqrt(gh * gh + gv * gv);
            if (gh == 0.0) {
                f.direction[i] = (gv == 0.0) ? 0.0 : kPi / 2.0;
            } else {
                f.direction[i] = std::atan(gv / gh);
            }
        }
    }
    return f;
}

// Magnitude-weighted orientation histograms per cell. Orientation is unsigned
// (period pi), split into `bins` uniform bins over (-pi/2, pi/2]; each vote is
// linearly interpolated between the two nearest bin centers with circular
// wraparound. Cell histograms are L2-normalized (eps = 1e-6) and concatenated
// row-major.
inline std::vector<double> hog_descriptor(const GradientField& field, int cell, int bins) {
    if (bins < 2) throw ConfigError("hog_descriptor: bins must be >= 2");
    if (cell < 1 || field.width % cell != 0 || field.height % cell != 0) {
        throw ConfigError("hog_descriptor: cell size must divide both image dimensions");
    }
    const int cells_x = field.width / cell;
    const int cells_y = field.height / cell;
    const double bin_width = kPi / bins;
    std::vector<double> out(static_cast<std::size_t>(cells_x) * cells_y * bins, 0.0);

    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * field.width + x;
            const double m = field.magnitude[i];
            if (m == 0.0) continue;
            // continuous bin coordinate; bin k is centered at -pi/2 + (k+0.5)w.
            // Written as d/w + (bins-1)/2 so a zero direction lands exactly on
            // the middle bin center.
            const double t = field.direction[i] / bin_width + (bins - 1) / 2.0;
            int k0 = static_cast<int>(std::floor(t));
            const double frac = t - k0;
            int k1 = k0 + 1;
            k0 = ((k0 % bins) + bins) % bins;
            k1 = ((k1 % bins) + bins) % bins;
            const std::size_t cell_index =
                static_cast<std::size_t>(y / cell) * cells_x + static_cast<std::size_t>(x / cell);
            double* hist = out.data() + cell_index * bins;
            hist[k0] += (1.0 - frac) * m;
            hist[k1] += frac * m;
        }
    }

    constexpr double eps = 1e-6;
    for (int c = 0; c < cells_x * cells_y; ++c) {
        double* hist = out.data() + static_cast<std::size_t>(c) * bins;
        double norm2 = 0.0;
        for (int b = 0; b < bins; ++b) norm2 += hist[b] * hist[b];
        const double inv = 1.0 / std::sqrt(norm2 + eps * eps);
        for (int b = 0; b < bins; ++b) hist[b] *= inv;
    }
    return out;
}

// Fixed layout geometric || lbp || hog.
inline FeatureVector assemble(const std::vector<double>& geo, const std::vector<double>& lbp,
                              const std::vector<double>& hog) {
    const std::vector<const std::vector<double>*> parts = {&geo, &lbp, &hog};
    const char* names[] = {"geometric", "lbp", "hog"};
    FeatureVector fv;
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p]->empty()) {
            throw DataError(std::string("assemble: segment '") + names[p] + "' is empty");
        }
        for (double v : *parts[p]) {
            if (!std::isfinite(v)) {
                throw DataError(std::string("assemble: non-finite value in segment '") + names[p] +
                                "'");
            }
        }
        fv.schema.segments.push_back({names[p], offset, parts[p]->size()});
        fv.values.insert(fv.values.end(), parts[p]->begin(), parts[p]->end());
        offset += parts[p]->size();
    }
    return fv;
}

// ---------------------------------------------------------------------------
// Feature store: CSV with one named column per dimension plus sequence_id and
// label. 17 significant digits guarantee bit-exact double round-trips.

struct FeatureRow {
    std::string sequence_id;
    std::string label;
    std::vector<double> values;
};

struct FeatureTable {
    FeatureSchema schema;
    std::vector<FeatureRow> rows;
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_feature_csv(const FeatureTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write features CSV: " + path);
    out << "sequence_id,label";
    const char* prefixes[] = {"geo", "lbp", "hog"};
    for (std::size_t p = 0; p < 3; ++p) {
        const auto& seg = table.schema.segments[p];
        for (std::size_t i = 0; i < seg.length; ++i) out << "," << prefixes[p] << "_" << i;
    }
    out << "\n";
    for (const auto& row : table.rows) {
        out << row.sequence_id << "," << row.label;
        for (double v : row.values) out << "," << format_g17(v);
        out << "\n";
    }
    if (!out) throw DataError("failed writing features CSV: " + path);
}

inline FeatureTable read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open features CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("features CSV is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // header: sequence_id,label,geo_0..,lbp_0..,hog_0..
    std::vector<std::string> cols;
    {
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cols.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cols.push_back(cur);
    }
    if (cols.size() < 3 || cols[0] != "sequence_id" || cols[1] != "label") {
        throw DataError("features CSV header malformed: " + path);
    }
    FeatureTable table;
    const char* prefixes[] = {"geo_", "lbp_", "hog_"};
    const char* names[] = {"geometric", "lbp", "hog"};
    std::size_t col = 2;
    std::size_t offset = 0;
    for (int p = 0; p < 3; ++p) {
        std::size_t len = 0;
        while (col + len < cols.size() && cols[col + len].rfind(prefixes[p], 0) == 0) ++len;
        table.schema.segments.push_back({names[p], offset, len});
        offset += len;
        col += len;
    }
    if (col != cols.size() || table.schema.total_length() == 0) {
        throw DataError("features CSV columns do not match geo/lbp/hog layout: " + path);
    }

    const std::size_t dim = table.schema.total_length();
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        FeatureRow row;
        std::size_t start = 0, field = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                const std::string cell = line.substr(start, i - start);
                if (field == 0) {
                    row.sequence_id = cell;
                } else if (field == 1) {
                    row.label = cell;
                } else {
                    row.values.push_back(std::strtod(cell.c_str(), nullptr));
                }
                start = i + 1;
                ++field;
            }
        }
        if (row.values.size() != dim) {
            throw DataError("features CSV row has wrong dimension: " + path);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw DataError("features CSV has no rows: " + path);
    return table;
}

}  // namespace mfeo::feat
