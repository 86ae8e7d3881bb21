#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "scgan/config.hpp"

namespace scgan {

enum class Stage { data, encoder, cluster, mappers, decoder, evaluate, plot };

const char* to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view name);
std::vector<Stage> all_stages();

// Runs one stage into cfg.output_dir, updating manifest.txt. Prerequisite
// stages must be recorded there with the current config fingerprint; a stage
// already recorded with the current fingerprint is skipped. Re-running a
// stage invalidates everything downstream.
//
// Throws PrerequisiteError naming the stage to run first, StaleArtifactError
// when upstream artifacts came from a different config.
void run_stage(Stage stage, const ExperimentConfig& cfg);

void run_all(const ExperimentConfig& cfg);

}  // namespace scgan
