#include "scgan/svg.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scgan/errors.hpp"

namespace scgan {

namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

void render(const Matrix& points, const std::vector<int>& labels, const PlotStyle& style,
            const std::filesystem::path& path) {
    if (!(style.world_max > style.world_min))
        throw UsageError("plot_scatter: empty world window");
    if (points.rows() > 0 && points.cols() != 2)
        throw UsageError("plot_scatter: expected 2 columns");
    if (!labels.empty() && labels.size() != points.rows())
        throw UsageError("plot_scatter: label count mismatch");
    for (std::size_t i = 0; i < points.rows(); ++i)
        if (!std::isfinite(points(i, 0)) || !std::isfinite(points(i, 1)))
            throw UsageError("plot_scatter: non-finite point");

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    const double span = style.world_max - style.world_min;
    const double s = style.size_px;
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                  "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  s, s, s, s);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", s, s);
    out << buf;
    if (!style.title.empty())
        out << "<text x=\"8\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">"
            << style.title << "</text>\n";

    for (std::size_t i = 0; i < points.rows(); ++i) {
        const double cx = (points(i, 0) - style.world_min) / span * s;
        const double cy = s - (points(i, 1) - style.world_min) / span * s;
        const char* color =
            labels.empty() ? kPalette[0]
                           : kPalette[static_cast<std::size_t>(
                                 ((labels[i] % static_cast<int>(kPalette.size())) +
                                  static_cast<int>(kPalette.size())) %
                                 static_cast<int>(kPalette.size()))];
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" "
                      "fill-opacity=\"0.7\"/>\n",
                      cx, cy, style.radius_px, color);
        out << buf;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void plot_scatter(const Batch2D& points, const PlotStyle& style,
                  const std::filesystem::path& path) {
    render(to_matrix(points), {}, style, path);
}

void plot_scatter(const Matrix& points, const std::vector<int>& labels,
                  const PlotStyle& style, const std::filesystem::path& path) {
    render(points, labels, style, path);
}

}  // namespace scgan
