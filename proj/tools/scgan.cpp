// Command-line front end: one subcommand per pipeline stage plus `all`.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scgan/errors.hpp"
#include "scgan/pipeline.hpp"

namespace {

struct CliOptions {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

scgan::ExperimentConfig build_config(const CliOptions& opts) {
    std::vector<std::string> overrides = opts.overrides;
    if (opts.out_dir) overrides.push_back("output_dir=" + *opts.out_dir);
    if (opts.seed) overrides.push_back("seed=" + std::to_string(*opts.seed));
    std::optional<std::filesystem::path> file;
    if (opts.config_path) file = *opts.config_path;
    return scgan::parse_config(file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-stage generative pipeline for 2D toy distributions"};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "config file (key = value lines)")
        ->check(CLI::ExistingFile);
    app.add_option("--set", opts.overrides, "config override key=value (repeatable)");
    app.add_option("--out", opts.out_dir, "output directory");
    app.add_option("--seed", opts.seed, "experiment seed");

    // Subcommand name -> stage; `all` runs the full sequence.
    const std::vector<std::pair<std::string, std::optional<scgan::Stage>>> commands = {
        {"data", scgan::Stage::data},         {"encode", scgan::Stage::encoder},
        {"cluster", scgan::Stage::cluster},   {"map", scgan::Stage::mappers},
        {"decode", scgan::Stage::decoder},    {"eval", scgan::Stage::evaluate},
        {"plot", scgan::Stage::plot},         {"all", std::nullopt},
    };
    const std::vector<std::string> descriptions = {
        "generate train/test splits",
        "train the contrastive encoder",
        "k-means over the training latents",
        "train one latent mapper per cluster",
        "train decoders for the configured latent modes",
        "reconstruction and generation metrics",
        "scatter plots of data, latents, and generations",
        "run every stage in order",
    };
    for (std::size_t i = 0; i < commands.size(); ++i)
        app.add_subcommand(commands[i].first, descriptions[i]);

    CLI11_PARSE(app, argc, argv);

    try {
        const scgan::ExperimentConfig cfg = build_config(opts);
        for (const auto& [name, stage] : commands) {
            if (!app.got_subcommand(name)) continue;
            if (stage)
                scgan::run_stage(*stage, cfg);
            else
                scgan::run_all(cfg);
            return 0;
        }
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const scgan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
