#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/rng.hpp"

namespace mfeo::cnn {

// One 5x5 convolution (valid correlation, sigmoid), one 2x2 average
// subsampling layer, one fully connected softmax output. 64-bit floats
// throughout so gradient checks hit 1e-6.
struct CnnModel {
    int input_side = 32;
    int num_maps = 6;
    int num_classes = 2;
    std::vector<double> kernels;    // num_maps x 5 x 5, row-major per map
    std::vector<double> conv_bias;  // num_maps
    std::vector<double> dense_w;    // num_classes x dense_inputs, row-major
    std::vector<double> dense_b;    // num_classes

    static constexpr int kKernelSide = 5;

    int conv_side() const { return input_side - kKernelSide + 1; }
    int pooled_side() const { return conv_side() / 2; }
    int dense_inputs() const { return num_maps * pooled_side() * pooled_side(); }

    void validate() const {
        if (input_side < kKernelSide + 1 || conv_side() % 2 != 0) {
            throw ConfigError("cnn: input side must leave an even convolution output");
        }
        if (num_maps < 1 || num_classes < 2) {
            throw ConfigError("cnn: need >= 1 map and >= 2 classes");
        }
        const std::size_t ks = static_cast<std::size_t>(num_maps) * kKernelSide * kKernelSide;
        if (kernels.size() != ks || conv_bias.size() != static_cast<std::size_t>(num_maps) ||
            dense_w.size() != static_cast<std::size_t>(num_classes) * dense_inputs() ||
            dense_b.size() != static_cast<std::size_t>(num_classes)) {
            throw ConfigError("cnn: parameter buffers do not match dimensions");
        }
        for (const auto* buf : {&kernels, &conv_bias, &dense_w, &dense_b}) {
            for (double v : *buf) {
                if (!std::isfinite(v)) throw DataError("cnn: non-finite model parameter");
            }
        }
    }

    // Glorot-style uniform init U(-s, s), s = scale * sqrt(6/(fan_in+fan_out));
    // biases start at zero.
    static CnnModel init(int input_side, int num_maps, int num_classes, std::uint64_t seed,
                         double scale = 1.0) {
        CnnModel m;
        m.input_side = input_side;
        m.num_maps = num_maps;
        m.num_classes = num_classes;
        if (input_side < kKernelSide + 1 || m.conv_side() % 2 != 0) {
            throw ConfigError("cnn: input side must leave an even convolution output");
        }
        Rng rng(seed);
        const double s_conv = scale * std::sqrt(6.0 / (25.0 + 25.0));
        m.kernels.resize(static_cast<std::size_t>(num_maps) * kKernelSide * kKernelSide);
        for (double& w : m.kernels) w = rng.uniform(-s_conv, s_conv);
        m.conv_bias.assign(static_cast<std::size_t>(num_maps), 0.0);
        const double s_dense =
            scale * std::sqrt(6.0 / (static_cast<double>(m.dense_inputs()) + num_classes));
        m.dense_w.resize(static_cast<std::size_t>(num_classes) * m.dense_inputs());
        for (double& w : m.dense_w) w = rng.uniform(-s_dense, s_dense);
        m.dense_b.assign(static_cast<std::size_t>(num_classes), 0.0);
        return m;
    }
};

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 8;
    std::uint64_t seed = 0;
    double weight_init_scale = 1.0;

    void validate() const {
        if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) {
            throw ConfigError("cnn: learning_rate must lie in [0,1]");
        }
        if (epochs < 0) throw ConfigError("cnn: epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("cnn: batch_size must be >= 1");
        if (!(weight_init_scale > 0.0)) throw ConfigError("cnn: weight_init_scale must be > 0");
    }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Selected features standardized to zero mean / unit variance over the filled
// prefix and placed row-major into a side x side map, zero-padded tail.
inline std::vector<double> reshape_to_map(const std::vector<double>& features, int side) {
    const std::size_t capacity = static_cast<std::size_t>(side) * side;
    if (features.empty()) throw DataError("reshape_to_map: empty feature vector");
    if (features.size() > capacity) {
        throw DataError("reshape_to_map: " + std::to_string(features.size()) +
                        " features exceed the " + std::to_string(capacity) +
                        "-cell input map; reduce dimensionality (tighter feature mask)");
    }
    double mean = 0.0;
    for (double v : features) mean += v;
    mean /= static_cast<double>(features.size());
    double var = 0.0;
    for (double v : features) var += (v - mean) * (v - mean);
    var /= static_cast<double>(features.size());
    const double stddev = std::sqrt(var);

    std::vector<double> map(capacity, 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        map[i] = stddev < 1e-12 ? 0.0 : (features[i] - mean) / stddev;
    }
    return map;
}

// Valid correlation + bias + sigmoid: out side = input side - 4.
inline std::vector<double> conv_forward(const std::vector<double>& map, const CnnModel& model) {
    const int in_side = model.input_side;
    const int out_side = model.conv_side();
    std::vector<double> out(static_cast<std::size_t>(model.num_maps) * out_side * out_side);
    for (int k = 0; k < model.num_maps; ++k) {
        const double* kernel = model.kernels.data() +
                               static_cast<std::size_t>(k) * CnnModel::kKernelSide *
                                   CnnModel::kKernelSide;
        double* dst = out.data() + static_cast<std::size_t>(k) * out_side * out_side;
        for (int y = 0; y < out_side; ++y) {
            for (int x = 0; x < out_side; ++x) {
                double z = model.conv_bias[static_cast<std::size_t>(k)];
                for (int v = 0; v < CnnModel::kKernelSide; ++v) {
                    const double* row = map.data() + static_cast<std::size_t>(y + v) * in_side + x;
                    const double* krow = kernel + static_cast<std::size_t>(v) * CnnModel::kKernelSide;
                    for (int u = 0; u < CnnModel::kKernelSide; ++u) z += krow[u] * row[u];
                }
                dst[static_cast<std::size_t>(y) * out_side + x] = sigmoid(z);
            }
        }
    }
    return out;
}

// Non-overlapping 2x2 block means.
inline std::vector<double> subsample_forward(const std::vector<double>& maps, int num_maps,
                                             int side) {
    if (side % 2 != 0) throw DataError("subsample_forward: input side must be even");
    const int out_side = side / 2;
    std::vector<double> out(static_cast<std::size_t>(num_maps) * out_side * out_side);
    for (int k = 0; k < num_maps; ++k) {
        const double* src = maps.data() + static_cast<std::size_t>(k) * side * side;
        double* dst = out.data() + static_cast<std::size_t>(k) * out_side * out_side;
        for (int y = 0; y < out_side; ++y) {
            for (int x = 0; x < out_side; ++x) {
                const double sum = src[static_cast<std::size_t>(2 * y) * side + 2 * x] +
                                   src[static_cast<std::size_t>(2 * y) * side + 2 * x + 1] +
                                   src[static_cast<std::size_t>(2 * y + 1) * side + 2 * x] +
                                   src[static_cast<std::size_t>(2 * y + 1) * side + 2 * x + 1];
                dst[static_cast<std::size_t>(y) * out_side + x] = sum / 4.0;
            }
        }
    }
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - peak);
        sum += probs[c];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

struct ForwardCache {
    std::vector<double> input;   // input_side^2
    std::vector<double> conv;    // num_maps x conv_side^2 (post-sigmoid)
    std::vector<double> pooled;  // num_maps x pooled_side^2 (the dense input)
    std::vector<double> probs;   // num_classes
};

inline ForwardCache forward_cached(const CnnModel& model, const std::vector<double>& features) {
    ForwardCache cache;
    cache.input = reshape_to_map(features, model.input_side);
    cache.conv = conv_forward(cache.input, model);
    cache.pooled = subsample_forward(cache.conv, model.num_maps, model.conv_side());
    std::vector<double> logits(static_cast<std::size_t>(model.num_classes));
    const int f_dim = model.dense_inputs();
    for (int c = 0; c < model.num_classes; ++c) {
        double z = model.dense_b[static_cast<std::size_t>(c)];
        const double* w = model.dense_w.data() + static_cast<std::size_t>(c) * f_dim;
        for (int f = 0; f < f_dim; ++f) z += w[f] * cache.pooled[static_cast<std::size_t>(f)];
        logits[static_cast<std::size_t>(c)] = z;
    }
    cache.probs = softmax(logits);
    return cache;
}

inline std::vector<double> forward(const CnnModel& model, const std::vector<double>& features) {
    return forward_cached(model, features).probs;
}

// Cross-entropy with the probability floored at 1e-12.
inline double loss(const std::vector<double>& probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
        throw DataError("loss: label out of range");
    }
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-12));
}

inline int predict(const CnnModel& model, const std::vector<double>& features) {
    const auto probs = forward(model, features);
    int best = 0;
    for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
        if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

struct Gradients {
    std::vector<double> kernels, conv_bias, dense_w, dense_b;

    explicit Gradients(const CnnModel& model)
        : kernels(model.kernels.size(), 0.0),
          conv_bias(model.conv_bias.size(), 0.0),
          dense_w(model.dense_w.size(), 0.0),
          dense_b(model.dense_b.size(), 0.0) {}

    void scale(double s) {
        for (auto* buf : {&kernels, &conv_bias, &dense_w, &dense_b}) {
            for (double& v : *buf) v *= s;
        }
    }
};

// Accumulates d(loss)/d(params) for one sample into grads. Subsampling
// broadcasts 1/4 of each pooled gradient; the sigmoid derivative is a(1-a).
inline void accumulate_gradients(const CnnModel& model, const ForwardCache& cache, int label,
                                 Gradients& grads) {
    const int f_dim = model.dense_inputs();
    const int conv_side = model.conv_side();
    const int pooled_side = model.pooled_side();

    std::vector<double> dlogits = cache.probs;
    dlogits[static_cast<std::size_t>(label)] -= 1.0;

    std::vector<double> dpooled(static_cast<std::size_t>(f_dim), 0.0);
    for (int c = 0; c < model.num_classes; ++c) {
        const double g = dlogits[static_cast<std::size_t>(c)];
        grads.dense_b[static_cast<std::size_t>(c)] += g;
        const double* w = model.dense_w.data() + static_cast<std::size_t>(c) * f_dim;
        double* gw = grads.dense_w.data() + static_cast<std::size_t>(c) * f_dim;
        for (int f = 0; f < f_dim; ++f) {
            gw[f] += g * cache.pooled[static_cast<std::size_t>(f)];
            dpooled[static_cast<std::size_t>(f)] += g * w[f];
        }
    }

    for (int k = 0; k < model.num_maps; ++k) {
        const double* a = cache.conv.data() + static_cast<std::size_t>(k) * conv_side * conv_side;
        const double* dp = dpooled.data() + static_cast<std::size_t>(k) * pooled_side * pooled_side;
        double* gk = grads.kernels.data() +
                     static_cast<std::size_t>(k) * CnnModel::kKernelSide * CnnModel::kKernelSide;
        double dbias = 0.0;
        for (int y = 0; y < conv_side; ++y) {
            for (int x = 0; x < conv_side; ++x) {
                const double act = a[static_cast<std::size_t>(y) * conv_side + x];
                const double dz =
                    dp[static_cast<std::size_t>(y / 2) * pooled_side + x / 2] / 4.0 * act *
                    (1.0 - act);
                dbias += dz;
                for (int v = 0; v < CnnModel::kKernelSide; ++v) {
                    const double* row =
                        cache.input.data() + static_cast<std::size_t>(y + v) * model.input_side + x;
                    double* gkrow = gk + static_cast<std::size_t>(v) * CnnModel::kKernelSide;
                    for (int u = 0; u < CnnModel::kKernelSide; ++u) gkrow[u] += dz * row[u];
                }
            }
        }
        grads.conv_bias[static_cast<std::size_t>(k)] += dbias;
    }
}

struct TrainSample {
    std::vector<double> features;
    int label = 0;
};

// Mini-batch SGD on mean cross-entropy. Returns the per-epoch mean training
// loss (losses recorded at forward time, before each update).
inline std::vector<double> train(CnnModel& model, const std::vector<TrainSample>& dataset,
                                 const TrainConfig& cfg) {
    cfg.validate();
    model.validate();
    if (dataset.empty()) throw DataError("cnn train: empty dataset");
    for (const auto& s : dataset) {
        if (s.label < 0 || s.label >= model.num_classes) {
            throw DataError("cnn train: label outside [0, num_classes)");
        }
    }

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Gradients grads(model);
            for (std::size_t k = begin; k < end; ++k) {
                const auto& sample = dataset[order[k]];
                const ForwardCache cache = forward_cached(model, sample.features);
                const double sample_loss = loss(cache.probs, sample.label);
                if (!std::isfinite(sample_loss)) {
                    throw StageError("cnn train: non-finite loss at epoch " +
                                     std::to_string(epoch));
                }
                epoch_loss += sample_loss;
                accumulate_gradients(model, cache, sample.label, grads);
            }
            const double step = cfg.learning_rate / static_cast<double>(end - begin);
            for (std::size_t i = 0; i < model.kernels.size(); ++i) {
                model.kernels[i] -= step * grads.kernels[i];
            }
            for (std::size_t i = 0; i < model.conv_bias.size(); ++i) {
                model.conv_bias[i] -= step * grads.conv_bias[i];
            }
            for (std::size_t i = 0; i < model.dense_w.size(); ++i) {
                model.dense_w[i] -= step * grads.dense_w[i];
            }
            for (std::size_t i = 0; i < model.dense_b.size(); ++i) {
                model.dense_b[i] -= step * grads.dense_b[i];
            }
        }
        curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Persistence: 16-byte header (8-byte magic, u32 version, u32 reserved), u32
// dimensions (input_side, num_maps, num_classes), then little-endian 64-bit
// floats: kernels, conv biases, dense weights row-major, dense biases.
// Round-trips are bit-exact.

namespace detail {

constexpr char kMagic[8] = {'M', 'F', 'E', 'O', 'C', 'N', 'N', '1'};

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline std::uint32_t get_u32(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ofstream& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline double get_f64(std::ifstream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_model(const CnnModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model: " + path);
    out.write(detail::kMagic, 8);
    detail::put_u32(out, 1);  // version
    detail::put_u32(out, 0);  // reserved
    detail::put_u32(out, static_cast<std::uint32_t>(model.input_side));
    detail::put_u32(out, static_cast<std::uint32_t>(model.num_maps));
    detail::put_u32(out, static_cast<std::uint32_t>(model.num_classes));
    for (const auto* buf : {&model.kernels, &model.conv_bias, &model.dense_w, &model.dense_b}) {
        for (double v : *buf) detail::put_f64(out, v);
    }
    if (!out) throw DataError("failed writing model: " + path);
}

inline CnnModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kMagic, 8) != 0) {
        throw DataError("not a model file: " + path);
    }
    const std::uint32_t version = detail::get_u32(in);
    detail::get_u32(in);  // reserved
    if (version != 1) throw DataError("unsupported model version in " + path);
    CnnModel model;
    model.input_side = static_cast<int>(detail::get_u32(in));
    model.num_maps = static_cast<int>(detail::get_u32(in));
    model.num_classes = static_cast<int>(detail::get_u32(in));
    if (!in || model.input_side < 6 || model.num_maps < 1 || model.num_classes < 2 ||
        model.input_side > 4096 || model.num_maps > 4096 || model.num_classes > 4096) {
        throw DataError("corrupt model header: " + path);
    }
    model.kernels.resize(static_cast<std::size_t>(model.num_maps) * 25);
    model.conv_bias.resize(static_cast<std::size_t>(model.num_maps));
    model.dense_w.resize(static_cast<std::size_t>(model.num_classes) * model.dense_inputs());
    model.dense_b.resize(static_cast<std::size_t>(model.num_classes));
    for (auto* buf : {&model.kernels, &model.conv_bias, &model.dense_w, &model.dense_b}) {
        for (double& v : *buf) v = detail::get_f64(in);
    }
    if (!in) throw DataError("truncated model file: " + path);
    model.validate();
    return model;
}

}  // namespace mfeo::cnn
