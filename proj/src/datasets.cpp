#include "scgan/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scgan/errors.hpp"
#include "scgan/rng.hpp"

namespace scgan {

namespace {

constexpr std::array<std::pair<DatasetId, const char*>, 6> kNames = {{
    {DatasetId::eight_gaussians, "eight_gaussians"},
    {DatasetId::checkerboard, "checkerboard"},
    {DatasetId::two_spirals, "two_spirals"},
    {DatasetId::abs, "abs"},
    {DatasetId::sinewaved_cube, "sinewaved_cube"},
    {DatasetId::four_circles, "four_circles"},
}};

}  // namespace

const char* to_string(DatasetId id) {
    for (const auto& [key, name] : kNames)
        if (key == id) return name;
    throw UsageError("unknown dataset id");
}

std::optional<DatasetId> dataset_from_string(std::string_view name) {
    for (const auto& [key, str] : kNames)
        if (name == str) return key;
    return std::nullopt;
}

std::vector<DatasetId> all_datasets() {
    std::vector<DatasetId> out;
    out.reserve(kNames.size());
    for (const auto& [key, name] : kNames) out.push_back(key);
    return out;
}

namespace {

LabeledBatch2D sample_eight_gaussians(std::size_t n, Rng& rng) {
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    constexpr double kRadius = 2.0;
    constexpr double kStd = 0.1;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(rng.index(8));
        const double angle = static_cast<double>(k) * (std::numbers::pi / 4.0);
        Point2 p;
        p.x1 = kRadius * std::cos(angle) + rng.normal(0.0, kStd);
        p.x2 = kRadius * std::sin(angle) + rng.normal(0.0, kStd);
        out.batch.points.push_back(p);
        out.labels.push_back(k);
    }
    return out;
}

LabeledBatch2D sample_checkerboard(std::size_t n, Rng& rng) {
    // Even-parity unit cells of the 4x4 grid on [-2,2]^2; 8 of 16 cells.
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    struct Cell {
        int i, j;
    };
    std::vector<Cell> cells;
    for (int i = -2; i < 2; ++i)
        for (int j = -2; j < 2; ++j)
            if (((i + j) % 2 + 2) % 2 == 0) cells.push_back({i, j});
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = rng.index(cells.size());
        Point2 p;
        p.x1 = static_cast<double>(cells[c].i) + rng.uniform();
        p.x2 = static_cast<double>(cells[c].j) + rng.uniform();
        out.batch.points.push_back(p);
        out.labels.push_back(static_cast<int>(c));
    }
    return out;
}

LabeledBatch2D sample_two_spirals(std::size_t n, Rng& rng) {
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    constexpr double kNoise = 0.02;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform();
        const double r = 2.0 * t;
        const double theta = 3.0 * std::numbers::pi * t;
        const int arm = rng.index(2) == 0 ? 0 : 1;
        const double sign = arm == 0 ? 1.0 : -1.0;
        Point2 p;
        p.x1 = sign * r * std::cos(theta) + rng.normal(0.0, kNoise);
        p.x2 = sign * r * std::sin(theta) + rng.normal(0.0, kNoise);
        out.batch.points.push_back(p);
        out.labels.push_back(arm);
    }
    return out;
}

LabeledBatch2D sample_abs(std::size_t n, Rng& rng) {
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point2 p;
        p.x1 = rng.uniform(-2.0, 2.0);
        p.x2 = std::abs(p.x1) + rng.normal(0.0, 0.05);
        out.batch.points.push_back(p);
        out.labels.push_back(p.x1 < 0.0 ? 0 : 1);
    }
    return out;
}

LabeledBatch2D sample_sinewaved_cube(std::size_t n, Rng& rng) {
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point2 p;
        p.x1 = rng.uniform(-2.0, 2.0);
        p.x2 = std::sin(2.0 * p.x1) + rng.uniform(-0.4, 0.4);
        out.batch.points.push_back(p);
        out.labels.push_back(0);
    }
    return out;
}

LabeledBatch2D sample_four_circles(std::size_t n, Rng& rng) {
    LabeledBatch2D out;
    out.batch.points.reserve(n);
    out.labels.reserve(n);
    constexpr double kRing = 0.75;
    constexpr double kNoise = 0.05;
    constexpr std::array<Point2, 4> kCenters = {{
        {1.5, 1.5},
        {-1.5, 1.5},
        {-1.5, -1.5},
        {1.5, -1.5},
    }};
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.index(4));
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = kRing + rng.normal(0.0, kNoise);
        Point2 p;
        p.x1 = kCenters[c].x1 + r * std::cos(angle);
        p.x2 = kCenters[c].x2 + r * std::sin(angle);
        out.batch.points.push_back(p);
        out.labels.push_back(c);
    }
    return out;
}

}  // namespace

LabeledBatch2D sample_dataset_labeled(DatasetId id, std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, std::string("dataset/") + to_string(id)));
    LabeledBatch2D out;
    switch (id) {
        case DatasetId::eight_gaussians: out = sample_eight_gaussians(n, rng); break;
        case DatasetId::checkerboard: out = sample_checkerboard(n, rng); break;
        case DatasetId::two_spirals: out = sample_two_spirals(n, rng); break;
        case DatasetId::abs: out = sample_abs(n, rng); break;
        case DatasetId::sinewaved_cube: out = sample_sinewaved_cube(n, rng); break;
        case DatasetId::four_circles: out = sample_four_circles(n, rng); break;
    }
    out.batch.provenance = to_string(id);
    return out;
}

Batch2D sample_dataset(DatasetId id, std::size_t n, std::uint64_t seed) {
    return sample_dataset_labeled(id, n, seed).batch;
}

std::pair<Batch2D, Batch2D> split(const Batch2D& batch, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw UsageError("split: train_fraction must lie in [0,1]");
    const std::size_t n = batch.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.index(i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train =
        static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
    std::pair<Batch2D, Batch2D> out;
    out.first.provenance = batch.provenance;
    out.second.provenance = batch.provenance;
    out.first.points.reserve(n_train);
    out.second.points.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_train ? out.first : out.second).points.push_back(batch.points[order[i]]);
    }
    return out;
}

Batch2D augment(const Batch2D& batch, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw UsageError("augment: sigma must be non-negative");
    Batch2D out;
    out.provenance = batch.provenance;
    out.points.reserve(batch.size());
    Rng rng(derive_seed(seed, "augment"));
    for (const Point2& p : batch.points) {
        Point2 q;
        q.x1 = p.x1 + rng.normal(0.0, sigma);
        q.x2 = p.x2 + rng.normal(0.0, sigma);
        out.points.push_back(q);
    }
    return out;
}

namespace {

void format_value(std::string& line, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    line += buf;
}

double parse_value(std::string_view field, std::size_t line_no) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream msg;
        msg << "bad float '" << std::string(field) << "' at line " << line_no;
        throw ParseError(msg.str());
    }
    return v;
}

}  // namespace

void save_batch(const Batch2D& batch, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "x1,x2\n";
    std::string line;
    for (const Point2& p : batch.points) {
        line.clear();
        format_value(line, p.x1);
        line += ',';
        format_value(line, p.x2);
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Batch2D load_batch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x1,x2")
        throw ParseError("expected header 'x1,x2' in " + path.string());
    Batch2D out;
    out.provenance = path.stem().string();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            std::ostringstream msg;
            msg << "missing comma at line " << line_no << " of " << path.string();
            throw ParseError(msg.str());
        }
        Point2 p;
        p.x1 = parse_value(std::string_view(line).substr(0, comma), line_no);
        p.x2 = parse_value(std::string_view(line).substr(comma + 1), line_no);
        out.points.push_back(p);
    }
    return out;
}

Matrix to_matrix(const Batch2D& batch) {
    Matrix m(batch.size(), 2);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        m(i, 0) = batch.points[i].x1;
        m(i, 1) = batch.points[i].x2;
    }
    return m;
}

Batch2D from_matrix(const Matrix& m, std::string provenance) {
    if (m.cols() != 2) throw UsageError("from_matrix: expected 2 columns");
    Batch2D out;
    out.provenance = std::move(provenance);
    out.points.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out.points.push_back({m(i, 0), m(i, 1)});
    return out;
}

}  // namespace scgan
