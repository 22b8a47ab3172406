#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfeo/cnn.hpp"
#include "mfeo/common.hpp"
#include "mfeo/dataset.hpp"
#include "mfeo/features.hpp"
#include "mfeo/image_io.hpp"
#include "mfeo/metrics.hpp"
#include "mfeo/mlo.hpp"
#include "mfeo/parallel.hpp"
#include "mfeo/preprocess.hpp"
#include "mfeo/select.hpp"

namespace mfeo::pipeline {

using Json = nlohmann::ordered_json;

struct SplitConfig {
    double train_fraction = 0.8;
    double test_fraction = 0.2;
    std::uint64_t seed = 7;
    bool subject_disjoint = true;
};

struct FeatureParams {
    double eps = 0.05;  // landmark threshold on [0,1] intensities; 0 = paper's literal rule
    int grid = 4;
    int hog_cell = 8;
    int hog_bins = 9;
};

struct PipelineConfig {
    std::string data_root;
    std::string labels_path;
    int image_size = 96;
    SplitConfig split;
    pre::AmfConfig amf;
    FeatureParams features;
    mlo::MloConfig mlo;
    mlo::SelectionParams selection;
    cnn::TrainConfig cnn;
    int cnn_maps = 6;
    int cnn_input_side = 32;
    std::string output_dir = "out";

    void validate() const {
        if (data_root.empty() || labels_path.empty()) {
            throw ConfigError("config: data.root and data.labels are required");
        }
        if (image_size < 8) throw ConfigError("config: data.image_size must be >= 8");
        if (!(split.train_fraction > 0.0 && split.train_fraction <= 1.0) ||
            split.test_fraction < 0.0) {
            throw ConfigError("config: split fractions out of range");
        }
        if (std::abs(split.train_fraction + split.test_fraction - 1.0) > 1e-9) {
            throw ConfigError("config: split fractions must sum to 1");
        }
        if (features.eps < 0.0) throw ConfigError("config: features.eps must be >= 0");
        if (features.grid < 1) throw ConfigError("config: features.grid must be >= 1");
        if (features.hog_cell < 1 || features.hog_bins < 2) {
            throw ConfigError("config: bad HOG parameters");
        }
        if (image_size % features.hog_cell != 0) {
            throw ConfigError("config: features.hog_cell must divide data.image_size");
        }
        if (cnn_maps < 1) throw ConfigError("config: cnn.maps must be >= 1");
        {
            // mlo bounds are derived from the feature dimension later
            auto probe = mlo;
            probe.bounds = mlo::Bounds::uniform(1, 0.0, 1.0);
            probe.validate();
        }
        if (!(selection.sparsity_lambda >= 0.0)) {
            throw ConfigError("config: mlo.lambda must be >= 0");
        }
        if (!(selection.threshold > 0.0 && selection.threshold < 1.0)) {
            throw ConfigError("config: mlo.threshold must lie in (0,1)");
        }
        cnn.validate();
    }
};

// ---------------------------------------------------------------------------
// Config file: line-oriented `section.key = value`; full-line # comments.
// Unknown keys are errors so misspelled hyperparameters cannot silently
// default.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v != std::floor(v)) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
    return static_cast<int>(v);
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a nonnegative integer, got '" +
                          value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config: key '" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace detail

inline PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    PipelineConfig cfg;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_number) +
                              " is not 'section.key = value'");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config: line " + std::to_string(line_number) +
                              " is missing a key or value");
        }

        if (key == "data.root") cfg.data_root = value;
        else if (key == "data.labels") cfg.labels_path = value;
        else if (key == "data.image_size") cfg.image_size = detail::parse_int(key, value);
        else if (key == "split.train_fraction") cfg.split.train_fraction = detail::parse_double(key, value);
        else if (key == "split.test_fraction") cfg.split.test_fraction = detail::parse_double(key, value);
        else if (key == "split.seed") cfg.split.seed = detail::parse_seed(key, value);
        else if (key == "split.subject_disjoint") cfg.split.subject_disjoint = detail::parse_bool(key, value);
        else if (key == "amf.w_min") cfg.amf.w_min = detail::parse_int(key, value);
        else if (key == "amf.w_max") cfg.amf.w_max = detail::parse_int(key, value);
        else if (key == "features.eps") cfg.features.eps = detail::parse_double(key, value);
        else if (key == "features.grid") cfg.features.grid = detail::parse_int(key, value);
        else if (key == "features.hog_cell") cfg.features.hog_cell = detail::parse_int(key, value);
        else if (key == "features.hog_bins") cfg.features.hog_bins = detail::parse_int(key, value);
        else if (key == "mlo.pop_size") cfg.mlo.pop_size = detail::parse_int(key, value);
        else if (key == "mlo.prides") cfg.mlo.prides = detail::parse_int(key, value);
        else if (key == "mlo.nomad_fraction") cfg.mlo.nomad_fraction = detail::parse_double(key, value);
        else if (key == "mlo.female_fraction") cfg.mlo.female_fraction = detail::parse_double(key, value);
        else if (key == "mlo.roaming_fraction") cfg.mlo.roaming_fraction = detail::parse_double(key, value);
        else if (key == "mlo.mating_prob") cfg.mlo.mating_prob = detail::parse_double(key, value);
        else if (key == "mlo.immigration_rate") cfg.mlo.immigration_rate = detail::parse_double(key, value);
        else if (key == "mlo.phi1") cfg.mlo.phi1 = detail::parse_double(key, value);
        else if (key == "mlo.phi2") cfg.mlo.phi2 = detail::parse_double(key, value);
        else if (key == "mlo.max_iters") cfg.mlo.max_iters = detail::parse_int(key, value);
        else if (key == "mlo.seed") cfg.mlo.seed = detail::parse_seed(key, value);
        else if (key == "mlo.threshold") cfg.selection.threshold = detail::parse_double(key, value);
        else if (key == "mlo.lambda") cfg.selection.sparsity_lambda = detail::parse_double(key, value);
        else if (key == "cnn.maps") cfg.cnn_maps = detail::parse_int(key, value);
        else if (key == "cnn.learning_rate") cfg.cnn.learning_rate = detail::parse_double(key, value);
        else if (key == "cnn.epochs") cfg.cnn.epochs = detail::parse_int(key, value);
        else if (key == "cnn.batch_size") cfg.cnn.batch_size = detail::parse_int(key, value);
        else if (key == "cnn.seed") cfg.cnn.seed = detail::parse_seed(key, value);
        else if (key == "cnn.weight_init_scale") cfg.cnn.weight_init_scale = detail::parse_double(key, value);
        else if (key == "output.dir") cfg.output_dir = value;
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

// --seed N overrides every seed in the config.
inline void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed) {
    cfg.split.seed = seed;
    cfg.mlo.seed = seed;
    cfg.cnn.seed = seed;
}

// ---------------------------------------------------------------------------
// Train/test split. Assignment is a pure per-row function (hash of the
// subject for subject-disjoint splits, of the sequence otherwise), so removing
// rows never reshuffles the rest — feature selection stays a function of the
// training rows alone.

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline bool assigned_to_train(const std::string& key, const SplitConfig& cfg) {
    return hash_unit(key, cfg.seed) < cfg.train_fraction;
}

// require_test is relaxed by the stages that consume only training rows
// (select, train), so an audit run on a train-only feature table still works.
inline SplitResult split_rows(const std::vector<std::string>& sequence_ids,
                              const std::vector<std::string>& subject_ids,
                              const SplitConfig& cfg, bool require_test = true) {
    SplitResult out;
    for (std::size_t i = 0; i < sequence_ids.size(); ++i) {
        const std::string& key = cfg.subject_disjoint ? subject_ids[i] : sequence_ids[i];
        (assigned_to_train(key, cfg) ? out.train : out.test).push_back(i);
    }
    if (require_test && out.test.empty()) throw ConfigError("empty test split");
    if (out.train.empty()) throw ConfigError("empty train split");
    return out;
}

// ---------------------------------------------------------------------------
// Stage plumbing: every stage consumes the previous stage's persisted
// artifact, so the chained subcommands and run_pipeline produce identical
// artifacts.

namespace paths {
inline std::filesystem::path preprocessed(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "preprocessed";
}
inline std::filesystem::path index_csv(const PipelineConfig& cfg) {
    return preprocessed(cfg) / "index.csv";
}
inline std::filesystem::path features_csv(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "features.csv";
}
inline std::filesystem::path mask_txt(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "mask.txt";
}
inline std::filesystem::path history_csv(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "mlo_history.csv";
}
inline std::filesystem::path model_bin(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "model.bin";
}
inline std::filesystem::path loss_csv(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "loss_curve.csv";
}
inline std::filesystem::path timings_json(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "timings.json";
}
inline std::filesystem::path report_json(const PipelineConfig& cfg) {
    return std::filesystem::path(cfg.output_dir) / "report.json";
}
}  // namespace paths

namespace detail {

class StageTimer {
public:
    explicit StageTimer(std::string name) : name_(std::move(name)), start_(clock::now()) {}

    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

    // timings live outside the determinism contract; the file is read-modify-
    // write so staged runs accumulate entries
    void commit(const PipelineConfig& cfg) const {
        Json j = Json::object();
        {
            std::ifstream in(paths::timings_json(cfg));
            if (in) {
                try {
                    j = Json::parse(in);
                } catch (const Json::exception&) {
                    j = Json::object();
                }
            }
        }
        j[name_] = seconds();
        std::ofstream out(paths::timings_json(cfg));
        out << j.dump(2) << "\n";
    }

private:
    using clock = std::chrono::steady_clock;
    std::string name_;
    clock::time_point start_;
};

struct IndexRow {
    std::string sequence_id;
    std::string subject_id;
    std::string label;
};

inline void write_index(const std::vector<IndexRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "sequence_id,subject_id,label\n";
    for (const auto& r : rows) out << r.sequence_id << "," << r.subject_id << "," << r.label << "\n";
}

inline std::vector<IndexRow> read_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StageError("missing preprocessed frames (" + path.string() +
                         "): run preprocess first");
    }
    std::vector<IndexRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw DataError("malformed index row: " + line);
        }
        rows.push_back({line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1)});
    }
    if (rows.empty()) throw DataError("preprocessed index is empty: " + path.string());
    return rows;
}

// sequence -> subject map from the labels file (features.csv does not carry
// subjects)
inline std::map<std::string, std::string> subject_map(const PipelineConfig& cfg) {
    std::map<std::string, std::string> out;
    for (const auto& row : data::detail::parse_labels(cfg.labels_path)) {
        out[row.sequence_id] = row.subject_id;
    }
    return out;
}

inline SplitResult split_feature_rows(const feat::FeatureTable& table,
                                      const PipelineConfig& cfg, bool require_test = true) {
    const auto subjects = subject_map(cfg);
    std::vector<std::string> sequence_ids, subject_ids;
    for (const auto& row : table.rows) {
        const auto it = subjects.find(row.sequence_id);
        if (it == subjects.end()) {
            throw DataError("sequence '" + row.sequence_id + "' missing from labels file");
        }
        sequence_ids.push_back(row.sequence_id);
        subject_ids.push_back(it->second);
    }
    return split_rows(sequence_ids, subject_ids, cfg.split, require_test);
}

inline std::vector<std::string> sorted_unique_labels(const feat::FeatureTable& table,
                                                     const std::vector<std::size_t>& rows) {
    std::set<std::string> names;
    for (auto i : rows) names.insert(table.rows[i].label);
    return {names.begin(), names.end()};
}

inline std::vector<double> masked_values(const std::vector<double>& values,
                                         const mlo::FeatureMask& mask) {
    std::vector<double> out;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) out.push_back(values[j]);
    }
    return out;
}

}  // namespace detail

inline Json echo_config(const PipelineConfig& cfg);

// Stage 1: load, denoise with the adaptive median filter, persist 8-bit
// frames plus the sequence index.
inline void stage_preprocess(const PipelineConfig& cfg) {
    const detail::StageTimer timer("preprocess");
    const auto dir = paths::preprocessed(cfg);
    std::filesystem::create_directories(dir);

    const data::Dataset ds = data::load_dataset(cfg.data_root, cfg.labels_path, cfg.image_size);
    for (const auto& err : ds.errors) {
        std::cerr << "warning: skipping sequence " << err.sequence_id << ": " << err.message
                  << "\n";
    }
    if (ds.samples.empty()) throw DataError("no loadable sequences in dataset");

    std::vector<detail::IndexRow> index(ds.samples.size());
    parallel_for(ds.samples.size(), [&](std::size_t i) {
        const auto& sample = ds.samples[i];
        const auto seq_dir = dir / sample.sequence_id;
        std::filesystem::create_directories(seq_dir);
        write_pgm(pre::adaptive_median_filter(sample.neutral, cfg.amf),
                  (seq_dir / "neutral.pgm").string());
        write_pgm(pre::adaptive_median_filter(sample.apex, cfg.amf),
                  (seq_dir / "apex.pgm").string());
        index[i] = {sample.sequence_id, sample.subject_id, ds.class_name(sample.label)};
    });
    detail::write_index(index, paths::index_csv(cfg));
    timer.commit(cfg);
}

// Stage 2: descriptor extraction over the denoised frames.
inline void stage_extract(const PipelineConfig& cfg) {
    const detail::StageTimer timer("extract");
    const auto rows = detail::read_index(paths::index_csv(cfg));

    std::vector<feat::FeatureRow> out(rows.size());
    std::vector<feat::FeatureSchema> schemas(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        const auto seq_dir = paths::preprocessed(cfg) / rows[i].sequence_id;
        const GrayImage neutral = read_pgm((seq_dir / "neutral.pgm").string());
        const GrayImage apex = read_pgm((seq_dir / "apex.pgm").string());

        const auto lm = feat::landmark_map(neutral, apex, cfg.features.eps);
        const auto geo = feat::geometric_features(lm, cfg.features.grid);
        const auto lbp = feat::lbp_histogram(apex);
        const auto field = feat::gradients(apex);
        const auto hog = feat::hog_descriptor(field, cfg.features.hog_cell, cfg.features.hog_bins);
        auto fv = feat::assemble(geo, lbp, hog);
        schemas[i] = fv.schema;
        out[i] = {rows[i].sequence_id, rows[i].label, std::move(fv.values)};
    });
    for (const auto& schema : schemas) {
        if (!(schema == schemas.front())) {
            throw StageError("feature schema differs across samples");
        }
    }

    feat::FeatureTable table;
    table.schema = schemas.front();
    table.rows = std::move(out);
    feat::write_feature_csv(table, paths::features_csv(cfg).string());
    timer.commit(cfg);
}

// Stage 3: MLO wrapper feature selection on the training rows only.
inline void stage_select(const PipelineConfig& cfg) {
    const detail::StageTimer timer("select");
    feat::FeatureTable table;
    try {
        table = feat::read_feature_csv(paths::features_csv(cfg).string());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run extract first");
    }
    const SplitResult split = detail::split_feature_rows(table, cfg, /*require_test=*/false);

    // label names to dense ids over training rows; the surrogate only tests
    // label equality, so the mapping cannot leak test information
    const auto names = detail::sorted_unique_labels(table, split.train);
    std::map<std::string, int> ids;
    for (std::size_t k = 0; k < names.size(); ++k) ids[names[k]] = static_cast<int>(k);

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (auto i : split.train) {
        features.push_back(table.rows[i].values);
        labels.push_back(ids.at(table.rows[i].label));
    }

    const auto result = mlo::select_features(features, labels, cfg.mlo, cfg.selection);
    mlo::write_mask(result.mask, paths::mask_txt(cfg).string());
    mlo::write_history_csv(result, paths::history_csv(cfg).string());
    timer.commit(cfg);
}

// Stage 4: train the CNN on masked training features.
inline void stage_train(const PipelineConfig& cfg) {
    const detail::StageTimer timer("train");
    feat::FeatureTable table;
    try {
        table = feat::read_feature_csv(paths::features_csv(cfg).string());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run extract first");
    }
    mlo::FeatureMask mask;
    try {
        mask = mlo::read_mask(paths::mask_txt(cfg).string(), table.schema.total_length());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run select first");
    }
    const SplitResult split = detail::split_feature_rows(table, cfg, /*require_test=*/false);

    std::vector<std::size_t> all_rows(table.rows.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    const auto names = detail::sorted_unique_labels(table, all_rows);
    std::map<std::string, int> ids;
    for (std::size_t k = 0; k < names.size(); ++k) ids[names[k]] = static_cast<int>(k);

    std::vector<cnn::TrainSample> train_set;
    for (auto i : split.train) {
        train_set.push_back(
            {detail::masked_values(table.rows[i].values, mask), ids.at(table.rows[i].label)});
    }

    cnn::CnnModel model = cnn::CnnModel::init(cfg.cnn_input_side, cfg.cnn_maps,
                                              static_cast<int>(names.size()), cfg.cnn.seed,
                                              cfg.cnn.weight_init_scale);
    const auto curve = cnn::train(model, train_set, cfg.cnn);
    cnn::save_model(model, paths::model_bin(cfg).string());

    std::ofstream out(paths::loss_csv(cfg));
    if (!out) throw DataError("cannot write loss curve");
    out << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < curve.size(); ++e) {
        out << e << "," << feat::format_g17(curve[e]) << "\n";
    }
    timer.commit(cfg);
}

// Stage 5: one evaluation pass over the held-out split; emits report.json.
inline Json stage_evaluate(const PipelineConfig& cfg) {
    const detail::StageTimer timer("evaluate");
    feat::FeatureTable table;
    try {
        table = feat::read_feature_csv(paths::features_csv(cfg).string());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run extract first");
    }
    mlo::FeatureMask mask;
    try {
        mask = mlo::read_mask(paths::mask_txt(cfg).string(), table.schema.total_length());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run select first");
    }
    cnn::CnnModel model;
    try {
        model = cnn::load_model(paths::model_bin(cfg).string());
    } catch (const DataError& e) {
        throw StageError(std::string(e.what()) + ": run train first");
    }
    const SplitResult split = detail::split_feature_rows(table, cfg);

    std::vector<std::size_t> all_rows(table.rows.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    const auto names = detail::sorted_unique_labels(table, all_rows);
    std::map<std::string, int> ids;
    for (std::size_t k = 0; k < names.size(); ++k) ids[names[k]] = static_cast<int>(k);
    const int num_classes = static_cast<int>(names.size());
    if (model.num_classes != num_classes) {
        throw StageError("model was trained for a different class set: run train first");
    }

    std::vector<int> predictions, labels;
    std::vector<double> predicted_scores, truth_scores;
    for (auto i : split.test) {
        const int label = ids.at(table.rows[i].label);
        const int predicted =
            cnn::predict(model, detail::masked_values(table.rows[i].values, mask));
        labels.push_back(label);
        predictions.push_back(predicted);
        truth_scores.push_back(static_cast<double>(label));
        predicted_scores.push_back(static_cast<double>(predicted));
    }
    const auto report =
        metrics::macro_report(predictions, labels, num_classes, predicted_scores, truth_scores);

    // confusion matrix rows = true class, cols = predicted class
    std::vector<std::vector<std::size_t>> matrix(
        static_cast<std::size_t>(num_classes),
        std::vector<std::size_t>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t k = 0; k < labels.size(); ++k) {
        ++matrix[static_cast<std::size_t>(labels[k])][static_cast<std::size_t>(predictions[k])];
    }

    Json j;
    j["config"] = echo_config(cfg);

    Json dataset;
    dataset["num_sequences"] = table.rows.size();
    dataset["classes"] = names;
    dataset["num_train"] = split.train.size();
    dataset["num_test"] = split.test.size();
    Json train_ids = Json::array(), test_ids = Json::array();
    for (auto i : split.train) train_ids.push_back(table.rows[i].sequence_id);
    for (auto i : split.test) test_ids.push_back(table.rows[i].sequence_id);
    dataset["train_sequences"] = train_ids;
    dataset["test_sequences"] = test_ids;
    j["dataset"] = dataset;

    Json selection;
    selection["mask_size"] = mlo::mask_count(mask);
    Json indices = Json::array();
    for (auto idx : mlo::mask_indices(mask)) indices.push_back(idx);
    selection["indices"] = indices;
    // convergence summary from the persisted optimizer history
    {
        std::ifstream hist(paths::history_csv(cfg));
        if (hist) {
            std::string line;
            std::getline(hist, line);  // header
            double first_best = 0.0, last_best = 0.0;
            int iterations = -1;
            bool any = false;
            while (std::getline(hist, line)) {
                if (line.empty()) continue;
                const auto c1 = line.find(',');
                const auto c2 = line.find(',', c1 + 1);
                const double best = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
                if (!any) first_best = best;
                last_best = best;
                any = true;
                ++iterations;
            }
            if (any) {
                selection["iterations"] = iterations;
                selection["initial_best_fitness"] = first_best;
                selection["final_best_fitness"] = last_best;
            }
        }
    }
    j["selection"] = selection;

    Json cnn_info;
    cnn_info["maps"] = model.num_maps;
    cnn_info["input_side"] = model.input_side;
    Json curve = Json::array();
    {
        std::ifstream lc(paths::loss_csv(cfg));
        if (lc) {
            std::string line;
            std::getline(lc, line);
            while (std::getline(lc, line)) {
                if (line.empty()) continue;
                curve.push_back(std::strtod(line.substr(line.find(',') + 1).c_str(), nullptr));
            }
        }
    }
    cnn_info["epochs"] = curve.size();
    if (!curve.empty()) cnn_info["final_mean_loss"] = curve.back();
    cnn_info["loss_curve"] = curve;
    j["cnn"] = cnn_info;

    Json matrix_json = Json::array();
    for (const auto& row : matrix) matrix_json.push_back(row);
    j["confusion_matrix"] = matrix_json;

    Json m;
    m["overall_accuracy"] = report.overall_accuracy;
    m["mae"] = report.mae;
    Json macro;
    macro["accuracy"] = report.macro.accuracy;
    macro["precision"] = report.macro.precision;
    macro["recall"] = report.macro.recall;
    macro["f_measure"] = report.macro.f_measure;
    macro["sensitivity"] = report.macro.sensitivity;
    macro["specificity"] = report.macro.specificity;
    m["macro"] = macro;
    Json per_class = Json::array();
    for (const auto& c : report.per_class) {
        Json entry;
        entry["class"] = names[static_cast<std::size_t>(c.class_id)];
        entry["tp"] = c.counts.tp;
        entry["fp"] = c.counts.fp;
        entry["tn"] = c.counts.tn;
        entry["fn"] = c.counts.fn;
        entry["accuracy"] = c.accuracy;
        entry["precision"] = c.precision;
        entry["recall"] = c.recall;
        entry["f_measure"] = c.f_measure;
        entry["sensitivity"] = c.sensitivity;
        entry["specificity"] = c.specificity;
        per_class.push_back(entry);
    }
    m["per_class"] = per_class;
    j["metrics"] = m;

    timer.commit(cfg);
    {
        std::ifstream t(paths::timings_json(cfg));
        Json timings = Json::object();
        if (t) {
            try {
                timings = Json::parse(t);
            } catch (const Json::exception&) {
            }
        }
        j["timings"] = timings;
    }

    std::ofstream out(paths::report_json(cfg));
    if (!out) throw DataError("cannot write report");
    out << j.dump(2) << "\n";
    return j;
}

// Full Fig.-1 flow: preprocess -> extract -> select -> train -> evaluate.
inline Json run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    stage_preprocess(cfg);
    stage_extract(cfg);
    stage_select(cfg);
    stage_train(cfg);
    return stage_evaluate(cfg);
}

inline Json echo_config(const PipelineConfig& cfg) {
    Json j;
    j["data.root"] = cfg.data_root;
    j["data.labels"] = cfg.labels_path;
    j["data.image_size"] = cfg.image_size;
    j["split.train_fraction"] = cfg.split.train_fraction;
    j["split.test_fraction"] = cfg.split.test_fraction;
    j["split.seed"] = cfg.split.seed;
    j["split.subject_disjoint"] = cfg.split.subject_disjoint;
    j["amf.w_min"] = cfg.amf.w_min;
    j["amf.w_max"] = cfg.amf.w_max;
    j["features.eps"] = cfg.features.eps;
    j["features.grid"] = cfg.features.grid;
    j["features.hog_cell"] = cfg.features.hog_cell;
    j["features.hog_bins"] = cfg.features.hog_bins;
    j["mlo.pop_size"] = cfg.mlo.pop_size;
    j["mlo.prides"] = cfg.mlo.prides;
    j["mlo.nomad_fraction"] = cfg.mlo.nomad_fraction;
    j["mlo.female_fraction"] = cfg.mlo.female_fraction;
    j["mlo.roaming_fraction"] = cfg.mlo.roaming_fraction;
    j["mlo.mating_prob"] = cfg.mlo.mating_prob;
    j["mlo.immigration_rate"] = cfg.mlo.immigration_rate;
    j["mlo.phi1"] = cfg.mlo.phi1;
    j["mlo.phi2"] = cfg.mlo.phi2;
    j["mlo.max_iters"] = cfg.mlo.max_iters;
    j["mlo.seed"] = cfg.mlo.seed;
    j["mlo.threshold"] = cfg.selection.threshold;
    j["mlo.lambda"] = cfg.selection.sparsity_lambda;
    j["cnn.maps"] = cfg.cnn_maps;
    j["cnn.learning_rate"] = cfg.cnn.learning_rate;
    j["cnn.epochs"] = cfg.cnn.epochs;
    j["cnn.batch_size"] = cfg.cnn.batch_size;
    j["cnn.seed"] = cfg.cnn.seed;
    j["cnn.weight_init_scale"] = cfg.cnn.weight_init_scale;
    j["output.dir"] = cfg.output_dir;
    return j;
}

}  // namespace mfeo::pipeline
