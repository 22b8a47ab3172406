// mfeo: micro-facial-expression recognition pipeline CLI.
//
// Subcommands run the Fig.-1 stages individually or end to end; every stage
// reads the previous stage's artifacts from the output directory.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfeo/common.hpp"
#include "mfeo/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", opts.seed, "override every seed in the config");
}

mfeo::pipeline::PipelineConfig load(const CommonOptions& opts) {
    auto cfg = mfeo::pipeline::parse_config(opts.config_path);
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (opts.seed >= 0) {
        mfeo::pipeline::apply_seed_override(cfg, static_cast<std::uint64_t>(opts.seed));
    }
    std::filesystem::create_directories(cfg.output_dir);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"micro-facial-expression recognition pipeline"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* cmd_run = app.add_subcommand("run", "run the full pipeline");
    auto* cmd_preprocess = app.add_subcommand("preprocess", "denoise frames");
    auto* cmd_extract = app.add_subcommand("extract", "extract the feature vectors");
    auto* cmd_select = app.add_subcommand("select", "select features with MLO");
    auto* cmd_train = app.add_subcommand("train", "train the CNN");
    auto* cmd_evaluate = app.add_subcommand("evaluate", "evaluate on the test split");
    for (auto* cmd : {cmd_run, cmd_preprocess, cmd_extract, cmd_select, cmd_train, cmd_evaluate}) {
        add_common(cmd, opts);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load(opts);
        if (cmd_run->parsed()) {
            const auto report = mfeo::pipeline::run_pipeline(cfg);
            std::cout << "report: " << mfeo::pipeline::paths::report_json(cfg).string() << "\n"
                      << "test accuracy: " << report["metrics"]["overall_accuracy"] << "\n";
        } else if (cmd_preprocess->parsed()) {
            mfeo::pipeline::stage_preprocess(cfg);
            std::cout << "preprocessed frames: "
                      << mfeo::pipeline::paths::preprocessed(cfg).string() << "\n";
        } else if (cmd_extract->parsed()) {
            mfeo::pipeline::stage_extract(cfg);
            std::cout << "features: " << mfeo::pipeline::paths::features_csv(cfg).string() << "\n";
        } else if (cmd_select->parsed()) {
            mfeo::pipeline::stage_select(cfg);
            std::cout << "mask: " << mfeo::pipeline::paths::mask_txt(cfg).string() << "\n";
        } else if (cmd_train->parsed()) {
            mfeo::pipeline::stage_train(cfg);
            std::cout << "model: " << mfeo::pipeline::paths::model_bin(cfg).string() << "\n";
        } else if (cmd_evaluate->parsed()) {
            const auto report = mfeo::pipeline::stage_evaluate(cfg);
            std::cout << "report: " << mfeo::pipeline::paths::report_json(cfg).string() << "\n"
                      << "test accuracy: " << report["metrics"]["overall_accuracy"] << "\n";
        }
    } catch (const mfeo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mfeo::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
