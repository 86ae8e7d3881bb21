#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scgan/datasets.hpp"
#include "scgan/decoder.hpp"
#include "scgan/encoder.hpp"
#include "scgan/latent.hpp"

namespace scgan {

// Everything that determines a run. Two equal configs produce byte-identical
// artifacts; the output directory is deliberately excluded from the
// fingerprint so runs into different directories stay comparable.
struct ExperimentConfig {
    DatasetId dataset = DatasetId::eight_gaussians;
    std::size_t n_train = 4096;
    std::size_t n_test = 4096;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";

    // Latent width above the data dimension: fitted-Gaussian samples must be
    // able to fall off the embedded manifold for the sampling modes to differ.
    std::size_t d_eps = 4;
    std::vector<std::size_t> encoder_hidden = {64, 64};
    std::vector<std::size_t> head_hidden = {32};
    std::size_t d_proj = 16;
    ContrastiveConfig contrastive{};

    std::optional<std::size_t> k_override;  // clustering.K when set explicitly
    std::size_t kmeans_max_iters = 100;

    MapperConfig mapper{};

    DecoderTrainConfig decoder{};  // .mode is ignored; `modes` drives training
    std::vector<LatentSamplingMode> modes = all_modes();

    std::size_t n_generate = 4096;

    std::size_t k() const;  // explicit override or the per-dataset default
    void validate() const;  // throws ConfigError naming the offending key

    // Sorted key=value lines over every run-determining field.
    std::string canonical() const;
    std::string fingerprint() const;  // 16 hex chars over canonical()
};

std::size_t default_k(DatasetId dataset);

// Layered: defaults, then the file (when given), then overrides in order.
// File lines are "key = value" with '#' comments; overrides are "key=value".
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<std::string>& overrides);

// Applies one "key=value" assignment; throws ConfigError on unknown keys or
// malformed values, citing the key path.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

}  // namespace scgan
