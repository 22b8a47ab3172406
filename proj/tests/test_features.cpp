#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mfeo/features.hpp"
#include "testutil.hpp"

using mfeo::GrayImage;
namespace feat = mfeo::feat;

namespace {

// --- oracles -----------------------------------------------------------

double euclid_loop(const std::vector<double>& x, const std::vector<double>& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(sum);
}

std::vector<double> lbp_hist_oracle(const GrayImage& img) {
    // per-pixel code loop + tally, written against the documented neighbor
    // order (clockwise from top-left, bit i = 2^i, ties count as >=)
    const int offsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {1, 0},
                               {1, 1},   {0, 1},  {-1, 1}, {-1, 0}};
    std::vector<double> hist(256, 0.0);
    double count = 0.0;
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            int code = 0;
            for (int i = 0; i < 8; ++i) {
                if (img.at(x + offsets[i][0], y + offsets[i][1]) >= img.at(x, y)) code += 1 << i;
            }
            hist[static_cast<std::size_t>(code)] += 1.0;
            count += 1.0;
        }
    }
    for (double& h : hist) h /= count;
    return hist;
}

std::vector<double> hog_oracle(const feat::GradientField& f, int cell, int bins) {
    // naive per-pixel vote loop with circular linear interpolation and the
    // same L2 normalization convention
    const int cx = f.width / cell, cy = f.height / cell;
    const double w = feat::kPi / bins;
    std::vector<double> out(static_cast<std::size_t>(cx) * cy * bins, 0.0);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
            if (f.magnitude[i] == 0.0) continue;
            const double t = f.direction[i] / w + (bins - 1) / 2.0;
            const int base = static_cast<int>(std::floor(t));
            const double frac = t - base;
            const int k0 = ((base % bins) + bins) % bins;
            const int k1 = (((base + 1) % bins) + bins) % bins;
            const std::size_t c = static_cast<std::size_t>(y / cell) * cx + x / cell;
            out[c * bins + static_cast<std::size_t>(k0)] += (1.0 - frac) * f.magnitude[i];
            out[c * bins + static_cast<std::size_t>(k1)] += frac * f.magnitude[i];
        }
    }
    for (int c = 0; c < cx * cy; ++c) {
        double n2 = 0.0;
        for (int b = 0; b < bins; ++b) n2 += out[c * bins + b] * out[c * bins + b];
        for (int b = 0; b < bins; ++b) out[c * bins + b] /= std::sqrt(n2 + 1e-12);
    }
    return out;
}

std::vector<double> geometric_oracle(const feat::LandmarkMap& map, int g) {
    std::vector<double> out(static_cast<std::size_t>(g) * g + 2, 0.0);
    std::vector<double> pixels(static_cast<std::size_t>(g) * g, 0.0);
    double landmarks = 0.0, total = 0.0;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const std::size_t c =
                static_cast<std::size_t>(y * g / map.height) * g + x * g / map.width;
            pixels[c] += 1.0;
            const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
            if (map.mask[i]) {
                out[c] += map.distances[i];
                landmarks += 1.0;
                total += map.distances[i];
            }
        }
    }
    for (std::size_t c = 0; c < pixels.size(); ++c) out[c] /= pixels[c];
    const double n = static_cast<double>(map.width) * map.height;
    out[pixels.size()] = landmarks / n;
    out[pixels.size() + 1] = total / n;
    return out;
}

// --- euclidean_distance --------------------------------------------------

TEST(Euclidean, IdenticalPointsAreZero) {
    const std::vector<double> p = {1.5, -2.0, 3.25};
    EXPECT_DOUBLE_EQ(feat::euclidean_distance(p, p), 0.0);
}

TEST(Euclidean, ThreeFourFive) {
    EXPECT_DOUBLE_EQ(feat::euclidean_distance({0.0, 0.0}, {3.0, 4.0}), 5.0);
}

TEST(Euclidean, SymmetryTriangleAndOracle) {
    mfeo::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(6), y(6), z(6);
        for (int j = 0; j < 6; ++j) {
            x[j] = rng.uniform(-3, 3);
            y[j] = rng.uniform(-3, 3);
            z[j] = rng.uniform(-3, 3);
        }
        const double dxy = feat::euclidean_distance(x, y);
        EXPECT_NEAR(dxy, feat::euclidean_distance(y, x), 1e-12);
        EXPECT_NEAR(dxy, euclid_loop(x, y), 1e-12);
        EXPECT_LE(dxy, feat::euclidean_distance(x, z) + feat::euclidean_distance(z, y) + 1e-12);
    }
}

TEST(Euclidean, LengthMismatchRejected) {
    EXPECT_THROW(feat::euclidean_distance({1.0}, {1.0, 2.0}), mfeo::DataError);
    EXPECT_THROW(feat::euclidean_distance({}, {}), mfeo::DataError);
}

// --- landmark_map ----------------------------------------------------------

TEST(LandmarkMap, IdenticalImagesHaveNoLandmarks) {
    const auto img = testutil::random_image(6, 6, 9);
    const auto map = feat::landmark_map(img, img, 0.0);
    for (auto m : map.mask) EXPECT_EQ(m, 0);
    for (auto d : map.distances) EXPECT_DOUBLE_EQ(d, 0.0);
}

TEST(LandmarkMap, SinglePixelDifference) {
    const GrayImage neutral(5, 5, 0.5);
    GrayImage expr = neutral;
    expr.at(2, 3) = 0.9;
    const auto map = feat::landmark_map(neutral, expr, 0.0);
    std::size_t count = 0;
    for (auto m : map.mask) count += m;
    EXPECT_EQ(count, 1u);
    EXPECT_NEAR(map.distances[3 * 5 + 2], 0.4, 1e-12);
}

TEST(LandmarkMap, EpsCountMatchesLoopOracle) {
    const auto a = testutil::random_image(9, 7, 40);
    const auto b = testutil::random_image(9, 7, 41);
    const double eps = 0.05;
    const auto map = feat::landmark_map(a, b, eps);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < a.size(); ++i) expected += std::abs(b.data[i] - a.data[i]) > eps;
    std::size_t got = 0;
    for (auto m : map.mask) got += m;
    EXPECT_EQ(got, expected);
}

TEST(LandmarkMap, DimMismatchRejected) {
    EXPECT_THROW(feat::landmark_map(GrayImage(4, 4, 0.1), GrayImage(5, 4, 0.1), 0.0),
                 mfeo::DataError);
}

// --- geometric_features ------------------------------------------------------

TEST(Geometric, IdenticalImagesGiveZeroVector) {
    const auto img = testutil::random_image(8, 8, 2);
    const auto map = feat::landmark_map(img, img, 0.0);
    for (double v : feat::geometric_features(map, 2)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Geometric, SingleLandmarkFixture) {
    // one landmark of distance 0.4 at (0,0): its 2x2-grid cell covers 4 of the
    // 16 pixels, so the cell mean is 0.1 and the landmark fraction 1/16
    const GrayImage neutral(4, 4, 0.5);
    GrayImage expr = neutral;
    expr.at(0, 0) = 0.9;
    const auto map = feat::landmark_map(neutral, expr, 0.0);
    const auto geo = feat::geometric_features(map, 2);
    ASSERT_EQ(geo.size(), 6u);
    EXPECT_NEAR(geo[0], 0.1, 1e-12);
    EXPECT_DOUBLE_EQ(geo[1], 0.0);
    EXPECT_DOUBLE_EQ(geo[2], 0.0);
    EXPECT_DOUBLE_EQ(geo[3], 0.0);
    EXPECT_NEAR(geo[4], 1.0 / 16.0, 1e-12);
    EXPECT_NEAR(geo[5], 0.4 / 16.0, 1e-12);
}

TEST(Geometric, MatchesLoopOracle) {
    const auto a = testutil::random_image(12, 12, 50);
    const auto b = testutil::random_image(12, 12, 51);
    const auto map = feat::landmark_map(a, b, 0.05);
    const auto got = feat::geometric_features(map, 4);
    const auto expected = geometric_oracle(map, 4);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
}

TEST(Geometric, OversizedGridRejected) {
    const auto img = testutil::random_image(4, 4, 1);
    const auto map = feat::landmark_map(img, img, 0.0);
    EXPECT_THROW(feat::geometric_features(map, 5), mfeo::ConfigError);
}

// --- lbp ------------------------------------------------------------------

TEST(Lbp, ConstantPatchIsAllOnes) {
    EXPECT_EQ(feat::lbp_code(std::vector<double>(9, 0.4)), 255);
}

TEST(Lbp, DominantCenterIsZero) {
    std::vector<double> patch(9, 0.0);
    patch[4] = 1.0;
    EXPECT_EQ(feat::lbp_code(patch), 0);
}

TEST(Lbp, AlternatingNeighborsMatchHandEvaluation) {
    // neighbors alternate 0.6/0.4 clockwise from top-left, so bits 0,2,4,6
    // fire: 1 + 4 + 16 + 64 = 85. Patch is row-major TL T TR / L C R / BL B BR.
    const std::vector<double> patch = {0.6, 0.4, 0.6,
                                       0.4, 0.5, 0.4,
                                       0.6, 0.4, 0.6};
    EXPECT_EQ(feat::lbp_code(patch), 85);
}

TEST(Lbp, WrongPatchSizeRejected) {
    EXPECT_THROW(feat::lbp_code(std::vector<double>(8, 0.1)), mfeo::DataError);
}

TEST(Lbp, CodeInvariantUnderConstantShift) {
    mfeo::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> patch(9);
        for (double& v : patch) v = rng.uniform(0.2, 0.6);
        std::vector<double> shifted = patch;
        for (double& v : shifted) v += 0.17;
        EXPECT_EQ(feat::lbp_code(patch), feat::lbp_code(shifted));
    }
}

TEST(LbpHistogram, ConstantImageHitsBin255) {
    const GrayImage img(6, 6, 0.3);
    const auto hist = feat::lbp_histogram(img);
    EXPECT_DOUBLE_EQ(hist[255], 1.0);
    EXPECT_DOUBLE_EQ(std::accumulate(hist.begin(), hist.end(), 0.0), 1.0);
}

TEST(LbpHistogram, SumsToOne) {
    const auto img = testutil::random_image(14, 9, 77);
    const auto hist = feat::lbp_histogram(img);
    EXPECT_NEAR(std::accumulate(hist.begin(), hist.end(), 0.0), 1.0, 1e-12);
}

TEST(LbpHistogram, MatchesCountOracle) {
    const auto img = testutil::random_image(10, 10, 78);
    const auto got = feat::lbp_histogram(img);
    const auto expected = lbp_hist_oracle(img);
    for (int b = 0; b < 256; ++b) EXPECT_DOUBLE_EQ(got[static_cast<std::size_t>(b)], expected[static_cast<std::size_t>(b)]);
}

TEST(LbpHistogram, ShiftInvariance) {
    const auto img = testutil::random_image(9, 9, 79, 0.1, 0.6);
    GrayImage shifted = img;
    for (double& v : shifted.data) v += 0.3;  // stays within [0,1], no clamping
    EXPECT_EQ(feat::lbp_histogram(img), feat::lbp_histogram(shifted));
}

TEST(LbpHistogram, TooSmallRejected) {
    EXPECT_THROW(feat::lbp_histogram(GrayImage(2, 3, 0.5)), mfeo::DataError);
}

// --- gradients --------------------------------------------------------------

TEST(Gradients, FlatFieldIsZero) {
    const auto f = feat::gradients(GrayImage(5, 5, 0.7));
    for (std::size_t i = 0; i < f.magnitude.size(); ++i) {
        EXPECT_DOUBLE_EQ(f.gh[i], 0.0);
        EXPECT_DOUBLE_EQ(f.gv[i], 0.0);
        EXPECT_DOUBLE_EQ(f.magnitude[i], 0.0);
        EXPECT_DOUBLE_EQ(f.direction[i], 0.0);
    }
}

TEST(Gradients, PythagoreanMagnitude) {
    EXPECT_DOUBLE_EQ(std::sqrt(3.0 * 3.0 + 4.0 * 4.0), 5.0);
    // and through the field computation: build an image whose central
    // differences at (1,1) are 0.3 horizontal, 0.4 vertical
    GrayImage img(3, 3, 0.5);
    img.at(0, 1) = 0.2;
    img.at(2, 1) = 0.8;  // gh = (0.8-0.2)/2 = 0.3
    img.at(1, 0) = 0.1;
    img.at(1, 2) = 0.9;  // gv = (0.9-0.1)/2 = 0.4
    const auto f = feat::gradients(img);
    EXPECT_NEAR(f.magnitude[4], 0.5, 1e-12);
}

TEST(Gradients, HorizontalRampHasZeroDirection) {
    GrayImage img(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) img.at(x, y) = x / 8.0;
    }
    const auto f = feat::gradients(img);
    for (int y = 1; y < 7; ++y) {
        for (int x = 1; x < 7; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * 8 + x;
            EXPECT_DOUBLE_EQ(f.gv[i], 0.0);
            EXPECT_DOUBLE_EQ(f.direction[i], 0.0);
        }
    }
}

TEST(Gradients, VerticalEdgeDirectionIsHalfPi) {
    GrayImage img(5, 5, 0.5);
    for (int x = 0; x < 5; ++x) img.at(x, 3) = 0.9;
    const auto f = feat::gradients(img);
    const std::size_t i = 2 * 5 + 2;  // gh = 0, gv != 0 there
    EXPECT_DOUBLE_EQ(f.gh[i], 0.0);
    EXPECT_NE(f.gv[i], 0.0);
    EXPECT_DOUBLE_EQ(f.direction[i], feat::kPi / 2.0);
}

// --- hog ---------------------------------------------------------------------

TEST(Hog, ConstantImageIsAllZero) {
    const auto f = feat::gradients(GrayImage(16, 16, 0.5));
    for (double v : feat::hog_descriptor(f, 8, 9)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Hog, HorizontalRampVotesOnlyIntoZeroBin) {
    GrayImage img(16, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) img.at(x, y) = x / 16.0;
    }
    const auto f = feat::gradients(img);
    const auto hog = feat::hog_descriptor(f, 8, 9);
    // D = 0 everywhere, which is the center of bin 4 for 9 bins
    for (int c = 0; c < 4; ++c) {
        for (int b = 0; b < 9; ++b) {
            if (b == 4) {
                EXPECT_GT(hog[static_cast<std::size_t>(c * 9 + b)], 0.0);
            } else {
                EXPECT_DOUBLE_EQ(hog[static_cast<std::size_t>(c * 9 + b)], 0.0);
            }
        }
    }
}

TEST(Hog, MatchesVoteOracleOnRandomImage) {
    const auto img = testutil::random_image(16, 16, 90);
    const auto f = feat::gradients(img);
    const auto got = feat::hog_descriptor(f, 8, 9);
    const auto expected = hog_oracle(f, 8, 9);
    ASSERT_EQ(got.size(), 36u);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-9);
}

TEST(Hog, NegationInvariance) {
    const auto img = testutil::random_image(16, 16, 91);
    GrayImage negated = img;
    for (double& v : negated.data) v = 1.0 - v;
    const auto a = feat::hog_descriptor(feat::gradients(img), 8, 9);
    const auto b = feat::hog_descriptor(feat::gradients(negated), 8, 9);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Hog, NonDivisibleCellRejected) {
    const auto f = feat::gradients(testutil::random_image(10, 10, 1));
    EXPECT_THROW(feat::hog_descriptor(f, 3, 9), mfeo::ConfigError);
}

// --- assemble & feature store -----------------------------------------------

TEST(Assemble, LayoutAndSchema) {
    const std::vector<double> geo(18, 0.1), lbp(256, 0.2), hog(36, 0.3);
    const auto fv = feat::assemble(geo, lbp, hog);
    EXPECT_EQ(fv.values.size(), 310u);
    ASSERT_EQ(fv.schema.segments.size(), 3u);
    EXPECT_EQ(fv.schema.segments[1].name, "lbp");
    EXPECT_EQ(fv.schema.segments[1].offset, 18u);
    EXPECT_EQ(fv.schema.segments[2].offset, 274u);
    EXPECT_EQ(fv.schema.total_length(), 310u);
}

TEST(Assemble, EmptySegmentRejected) {
    EXPECT_THROW(feat::assemble({}, {0.1}, {0.2}), mfeo::DataError);
}

TEST(Assemble, NonFiniteRejected) {
    EXPECT_THROW(feat::assemble({0.1}, {std::nan("")}, {0.2}), mfeo::DataError);
}

TEST(Assemble, SegmentExtractionRoundTrips) {
    mfeo::Rng rng(8);
    std::vector<double> geo(6), lbp(16), hog(9);
    for (double& v : geo) v = rng.uniform();
    for (double& v : lbp) v = rng.uniform();
    for (double& v : hog) v = rng.uniform();
    const auto fv = feat::assemble(geo, lbp, hog);
    EXPECT_EQ(fv.segment("geometric"), geo);
    EXPECT_EQ(fv.segment("lbp"), lbp);
    EXPECT_EQ(fv.segment("hog"), hog);
}

TEST(FeatureCsv, RoundTripIsBitExact) {
    testutil::TempDir tmp("fcsv");
    feat::FeatureTable table;
    table.schema.segments = {{"geometric", 0, 3}, {"lbp", 3, 4}, {"hog", 7, 2}};
    mfeo::Rng rng(123);
    for (int r = 0; r < 5; ++r) {
        feat::FeatureRow row;
        row.sequence_id = "seq" + std::to_string(r);
        row.label = r % 2 ? "happy" : "anger";
        for (int j = 0; j < 9; ++j) row.values.push_back(rng.uniform(-2.0, 2.0));
        table.rows.push_back(row);
    }
    const auto path = (tmp.path() / "features.csv").string();
    feat::write_feature_csv(table, path);
    const auto back = feat::read_feature_csv(path);
    ASSERT_TRUE(back.schema == table.schema);
    ASSERT_EQ(back.rows.size(), table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        EXPECT_EQ(back.rows[r].sequence_id, table.rows[r].sequence_id);
        EXPECT_EQ(back.rows[r].label, table.rows[r].label);
        ASSERT_EQ(back.rows[r].values.size(), table.rows[r].values.size());
        for (std::size_t j = 0; j < 9; ++j) {
            EXPECT_EQ(back.rows[r].values[j], table.rows[r].values[j]) << "r=" << r << " j=" << j;
        }
    }
}

}  // namespace
