#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scgan/datasets.hpp"
#include "scgan/latent.hpp"

namespace scgan {

// Mean over paired points of squared Euclidean distance.
double mse(const Batch2D& a, const Batch2D& b);

// Energy distance squared, D^2 = 2 E|x-y| - E|x-x'| - E|y-y'|, with
// U-statistic within-sample means (i != j) and a clamp at zero. A singleton
// sample's within term is defined as 0.
double energy_distance(const Batch2D& x, const Batch2D& y);

struct ModeMetrics {
    LatentSamplingMode mode = LatentSamplingMode::single_gaussian;
    bool present = false;
    double recon_mse = 0.0;
    double energy_distance = 0.0;
    double runtime_s = 0.0;
};

struct MetricReport {
    DatasetId dataset = DatasetId::eight_gaussians;
    std::string fingerprint;
    std::vector<ModeMetrics> rows;  // one per sampling mode, fixed order
    std::vector<std::string> flags;
};

// Assembles the per-mode grid; absent modes keep present=false and produce
// explicit markers in the outputs. Sets the "single_gaussian worst recon"
// flag when that ordering holds among present modes.
MetricReport build_report(DatasetId dataset, const std::string& fingerprint,
                          const std::vector<ModeMetrics>& measured);

// CSV rows "dataset,mode,recon_mse,energy_distance,runtime_s"; absent modes
// render metric fields as "absent".
void save_report_csv(const MetricReport& report, const std::filesystem::path& path);
MetricReport load_report_csv(const std::filesystem::path& path);

// Fixed-width text table, one line per mode.
std::string format_report_table(const MetricReport& report);

}  // namespace scgan
