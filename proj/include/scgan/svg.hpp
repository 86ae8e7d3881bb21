#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scgan/datasets.hpp"
#include "scgan/matrix.hpp"

namespace scgan {

// Square viewport with a fixed world window; points outside the window are
// still emitted (SVG clips them).
struct PlotStyle {
    double world_min = -4.0;
    double world_max = 4.0;
    double size_px = 480.0;
    double radius_px = 2.0;
    std::string title;
};

// One circle per point; `labels`, when non-empty, selects a palette color per
// point (cluster coloring).
void plot_scatter(const Batch2D& points, const PlotStyle& style,
                  const std::filesystem::path& path);
void plot_scatter(const Matrix& points, const std::vector<int>& labels,
                  const PlotStyle& style, const std::filesystem::path& path);

}  // namespace scgan
