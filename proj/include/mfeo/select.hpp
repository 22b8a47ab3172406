#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/features.hpp"
#include "mfeo/mlo.hpp"
#include "mfeo/rng.hpp"

namespace mfeo::mlo {

struct SelectionParams {
    int folds = 3;
    double sparsity_lambda = 0.01;  // fitness = accuracy - lambda * |mask| / d
    double threshold = 0.5;         // binarize threshold on [0,1]-normalized positions
};

struct SelectionResult {
    FeatureMask mask;
    BestHistory history;
    Bounds bounds;
    double threshold = 0.5;
};

namespace detail {

// Stratified fold assignment: per class, dataset-order indices are shuffled
// with a generator derived from the config seed and dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                         std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<int> fold_of(labels.size(), 0);
    Rng rng(splitmix64(seed ^ 0x5e1ec7f01d5ull));
    for (auto& [cls, indices] : by_class) {
        rng.shuffle(indices);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            fold_of[indices[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
        }
    }
    return fold_of;
}

// 1-nearest-neighbor on the masked coordinates; distance ties go to the
// lower-indexed training row.
inline double knn_fold_accuracy(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const std::vector<int>& fold_of,
                                int folds, const FeatureMask& mask) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) active.push_back(j);
    }
    std::size_t correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (fold_of[i] != f) continue;
            double best = std::numeric_limits<double>::infinity();
            int predicted = -1;
            for (std::size_t t = 0; t < features.size(); ++t) {
                if (fold_of[t] == f) continue;
                double dist = 0.0;
                for (std::size_t j : active) {
                    const double d = features[i][j] - features[t][j];
                    dist += d * d;
                }
                if (dist < best) {
                    best = dist;
                    predicted = labels[t];
                }
            }
            correct += predicted == labels[i];
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace detail

// Wrapper feature selection: maximizes stratified k-fold 1-NN accuracy minus
// the sparsity penalty. Bounds are fixed to [0,1]^d (mask space); the
// returned mask decodes the optimizer's global best.
inline SelectionResult select_features(const std::vector<std::vector<double>>& features,
                                       const std::vector<int>& labels, MloConfig cfg,
                                       const SelectionParams& params = {}) {
    if (features.size() < 10 || features.size() != labels.size()) {
        throw DataError("select_features: need >= 10 samples with one label each");
    }
    const std::size_t d = features.front().size();
    if (d == 0) throw DataError("select_features: feature vectors are empty");
    for (const auto& row : features) {
        if (row.size() != d) throw DataError("select_features: inconsistent feature dimensions");
    }
    {
        std::vector<int> classes = labels;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        if (classes.size() < 2) throw DataError("select_features: need at least 2 classes");
    }
    if (params.folds < 2) throw ConfigError("select_features: folds must be >= 2");
    if (!(params.threshold > 0.0 && params.threshold < 1.0)) {
        throw ConfigError("select_features: threshold must lie in (0,1)");
    }

    cfg.bounds = Bounds::uniform(d, 0.0, 1.0);
    const auto fold_of = detail::stratified_folds(labels, params.folds, cfg.seed);

    const Bounds bounds = cfg.bounds;
    const double lambda = params.sparsity_lambda;
    const double threshold = params.threshold;
    const int folds = params.folds;
    const Evaluator evaluator = [&, lambda, threshold, folds](const Vec& position) {
        const FeatureMask mask = binarize(position, bounds, threshold);
        const double acc =
            detail::knn_fold_accuracy(features, labels, fold_of, folds, mask);
        return acc - lambda * static_cast<double>(mask_count(mask)) / static_cast<double>(d);
    };

    SelectionResult result;
    result.history = run(cfg, evaluator);
    result.bounds = bounds;
    result.threshold = threshold;
    result.mask = binarize(result.history.gbest_position, bounds, threshold);
    return result;
}

inline std::vector<std::size_t> mask_indices(const FeatureMask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) out.push_back(j);
    }
    return out;
}

// Optimizer history export: iteration,best_fitness,mean_fitness,mask_size.
inline void write_history_csv(const SelectionResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write history CSV: " + path);
    out << "iteration,best_fitness,mean_fitness,mask_size\n";
    for (const auto& entry : result.history.entries) {
        const auto mask = binarize(entry.best_position, result.bounds, result.threshold);
        out << entry.iteration << "," << feat::format_g17(entry.best_fitness) << ","
            << feat::format_g17(entry.mean_fitness) << "," << mask_count(mask) << "\n";
    }
    if (!out) throw DataError("failed writing history CSV: " + path);
}

// Mask artifact: newline-separated selected indices.
inline void write_mask(const FeatureMask& mask, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mask: " + path);
    for (auto j : mask_indices(mask)) out << j << "\n";
    if (!out) throw DataError("failed writing mask: " + path);
}

inline FeatureMask read_mask(const std::string& path, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mask: " + path);
    FeatureMask mask(dim, 0);
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t j = std::stoul(line);
        if (j >= dim) throw DataError("mask index out of range in " + path);
        mask[j] = 1;
        any = true;
    }
    if (!any) throw DataError("mask file is empty: " + path);
    return mask;
}

}  // namespace mfeo::mlo
