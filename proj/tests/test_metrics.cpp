#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "mfeo/metrics.hpp"
#include "mfeo/rng.hpp"

namespace metrics = mfeo::metrics;
using metrics::ConfusionCounts;

namespace {

TEST(Confusion, PerfectPredictor) {
    const std::vector<int> labels = {0, 1, 1, 2, 1};
    const auto c = metrics::confusion(labels, labels, 1);
    EXPECT_EQ(c.tp, 3u);
    EXPECT_EQ(c.tn, 2u);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
}

TEST(Confusion, ConstantWrongPredictor) {
    const std::vector<int> predictions(7, 2);
    const std::vector<int> labels(7, 0);
    const auto c = metrics::confusion(predictions, labels, 2);
    EXPECT_EQ(c.fp, 7u);
    EXPECT_EQ(c.tp + c.tn + c.fn, 0u);
}

TEST(Confusion, MatchesCountingOracle) {
    mfeo::Rng rng(5);
    std::vector<int> predictions(50), labels(50);
    for (int i = 0; i < 50; ++i) {
        predictions[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
    }
    for (int c = 0; c < 3; ++c) {
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (int i = 0; i < 50; ++i) {
            const bool p = predictions[static_cast<std::size_t>(i)] == c;
            const bool t = labels[static_cast<std::size_t>(i)] == c;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
            tn += !p && !t;
        }
        const auto counts = metrics::confusion(predictions, labels, c);
        EXPECT_EQ(counts.tp, tp);
        EXPECT_EQ(counts.fp, fp);
        EXPECT_EQ(counts.tn, tn);
        EXPECT_EQ(counts.fn, fn);
        EXPECT_EQ(counts.total(), 50u);
    }
}

TEST(Confusion, LengthMismatchRejected) {
    EXPECT_THROW(metrics::confusion({0, 1}, {0}, 0), mfeo::DataError);
    EXPECT_THROW(metrics::confusion({}, {}, 0), mfeo::DataError);
}

TEST(RatioMetrics, SimpleArithmetic) {
    ConfusionCounts c{9, 1, 0, 0};
    EXPECT_DOUBLE_EQ(metrics::precision(c), 0.9);
}

TEST(RatioMetrics, ZeroOverZeroConvention) {
    ConfusionCounts c{0, 0, 5, 0};
    EXPECT_DOUBLE_EQ(metrics::recall(c), 0.0);
    EXPECT_DOUBLE_EQ(metrics::precision(c), 0.0);
    EXPECT_DOUBLE_EQ(metrics::f_measure(c), 0.0);
}

TEST(RatioMetrics, FixtureMatchesHandSubstitution) {
    // tp=50, tn=45, fp=5, fn=0
    ConfusionCounts c{50, 5, 45, 0};
    EXPECT_DOUBLE_EQ(metrics::accuracy(c), 0.95);
    EXPECT_NEAR(metrics::precision(c), 50.0 / 55.0, 1e-12);
    EXPECT_DOUBLE_EQ(metrics::recall(c), 1.0);
    EXPECT_NEAR(metrics::f_measure(c), 2.0 * (50.0 / 55.0) / (50.0 / 55.0 + 1.0), 1e-12);
    EXPECT_NEAR(metrics::f_measure(c), 0.9524, 1e-4);
    EXPECT_DOUBLE_EQ(metrics::specificity(c), 0.9);
}

TEST(RatioMetrics, RecallEqualsSensitivityAlways) {
    mfeo::Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{rng.uniform_index(20), rng.uniform_index(20), rng.uniform_index(20),
                          rng.uniform_index(20)};
        EXPECT_DOUBLE_EQ(metrics::recall(c), metrics::sensitivity(c));
    }
}

TEST(RatioMetrics, FMeasureBetweenPrecisionAndRecall) {
    mfeo::Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{rng.uniform_index(30), rng.uniform_index(30), rng.uniform_index(30),
                          rng.uniform_index(30)};
        const double p = metrics::precision(c);
        const double r = metrics::recall(c);
        const double f = metrics::f_measure(c);
        if (p + r == 0.0) {
            EXPECT_DOUBLE_EQ(f, 0.0);
        } else {
            EXPECT_LE(f, std::max(p, r) + 1e-12);
            EXPECT_GE(f, std::min(p, r) - 1e-12);
        }
    }
}

TEST(Mae, IdenticalVectorsAreZero) {
    EXPECT_DOUBLE_EQ(metrics::mae({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), 0.0);
}

TEST(Mae, HandArithmetic) {
    EXPECT_DOUBLE_EQ(metrics::mae({2.0, 4.0}, {1.0, 2.0}), 1.5);
}

TEST(Mae, MatchesLoopOracleAndProperties) {
    mfeo::Rng rng(13);
    std::vector<double> a(40), b(40);
    for (int i = 0; i < 40; ++i) {
        a[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
        b[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
    }
    double expected = 0.0;
    for (int i = 0; i < 40; ++i) {
        expected += std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    }
    expected /= 40.0;
    EXPECT_NEAR(metrics::mae(a, b), expected, 1e-12);
    EXPECT_NEAR(metrics::mae(a, b), metrics::mae(b, a), 1e-12);
    auto a_shift = a, b_shift = b;
    for (double& v : a_shift) v += 2.5;
    for (double& v : b_shift) v += 2.5;
    EXPECT_NEAR(metrics::mae(a_shift, b_shift), metrics::mae(a, b), 1e-12);
}

TEST(MacroReport, PerfectPredictor) {
    const std::vector<int> labels = {0, 1, 2, 1, 0, 2};
    std::vector<double> scores;
    for (int v : labels) scores.push_back(v);
    const auto report = metrics::macro_report(labels, labels, 3, scores, scores);
    EXPECT_DOUBLE_EQ(report.overall_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(report.macro.precision, 1.0);
    EXPECT_DOUBLE_EQ(report.macro.recall, 1.0);
    EXPECT_DOUBLE_EQ(report.macro.f_measure, 1.0);
    EXPECT_DOUBLE_EQ(report.mae, 0.0);
}

TEST(MacroReport, BinaryMacroPrecisionIsMeanOfOneVsRest) {
    const std::vector<int> predictions = {0, 0, 1, 1, 0, 1, 0};
    const std::vector<int> labels = {0, 1, 1, 0, 0, 1, 1};
    std::vector<double> ps, ts;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        ps.push_back(predictions[i]);
        ts.push_back(labels[i]);
    }
    const auto report = metrics::macro_report(predictions, labels, 2, ps, ts);
    const double p0 = metrics::precision(metrics::confusion(predictions, labels, 0));
    const double p1 = metrics::precision(metrics::confusion(predictions, labels, 1));
    EXPECT_NEAR(report.macro.precision, (p0 + p1) / 2.0, 1e-12);
}

TEST(MacroReport, MatchesIndependentComputation) {
    mfeo::Rng rng(21);
    std::vector<int> predictions(60), labels(60);
    std::vector<double> ps(60), ts(60);
    for (int i = 0; i < 60; ++i) {
        predictions[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
        ps[static_cast<std::size_t>(i)] = predictions[static_cast<std::size_t>(i)];
        ts[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)];
    }
    const auto report = metrics::macro_report(predictions, labels, 3, ps, ts);

    // second implementation: straight sums
    double macro_recall = 0.0;
    for (int c = 0; c < 3; ++c) {
        double tp = 0, fn = 0;
        for (int i = 0; i < 60; ++i) {
            if (labels[static_cast<std::size_t>(i)] == c) {
                (predictions[static_cast<std::size_t>(i)] == c ? tp : fn) += 1;
            }
        }
        macro_recall += (tp + fn) == 0 ? 0.0 : tp / (tp + fn);
    }
    macro_recall /= 3.0;
    EXPECT_NEAR(report.macro.recall, macro_recall, 1e-12);

    std::size_t exact = 0;
    for (int i = 0; i < 60; ++i) {
        exact += predictions[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)];
    }
    EXPECT_DOUBLE_EQ(report.overall_accuracy, exact / 60.0);
}

TEST(MacroReport, AccuracyInvariantUnderRelabeling) {
    mfeo::Rng rng(22);
    std::vector<int> predictions(30), labels(30);
    for (int i = 0; i < 30; ++i) {
        predictions[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
    }
    const int perm[3] = {2, 0, 1};
    std::vector<int> rp(30), rl(30);
    std::vector<double> ps(30), ts(30), rps(30), rts(30);
    for (int i = 0; i < 30; ++i) {
        rp[static_cast<std::size_t>(i)] = perm[predictions[static_cast<std::size_t>(i)]];
        rl[static_cast<std::size_t>(i)] = perm[labels[static_cast<std::size_t>(i)]];
        ps[static_cast<std::size_t>(i)] = predictions[static_cast<std::size_t>(i)];
        ts[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)];
        rps[static_cast<std::size_t>(i)] = rp[static_cast<std::size_t>(i)];
        rts[static_cast<std::size_t>(i)] = rl[static_cast<std::size_t>(i)];
    }
    const auto a = metrics::macro_report(predictions, labels, 3, ps, ts);
    const auto b = metrics::macro_report(rp, rl, 3, rps, rts);
    EXPECT_DOUBLE_EQ(a.overall_accuracy, b.overall_accuracy);
}

TEST(MacroReport, EmptyClassSetRejected) {
    EXPECT_THROW(metrics::macro_report({0}, {0}, 0, {0.0}, {0.0}), mfeo::DataError);
}

}  // namespace
