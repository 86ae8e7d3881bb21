#include "scgan/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scgan/errors.hpp"

namespace scgan {

double mse(const Batch2D& a, const Batch2D& b) {
    if (a.size() != b.size()) throw UsageError("mse: batch sizes differ");
    if (a.empty()) throw UsageError("mse: empty batches");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dx = a.points[i].x1 - b.points[i].x1;
        const double dy = a.points[i].x2 - b.points[i].x2;
        acc += dx * dx + dy * dy;
    }
    return acc / static_cast<double>(a.size());
}

namespace {

double point_dist(const Point2& p, const Point2& q) {
    const double dx = p.x1 - q.x1;
    const double dy = p.x2 - q.x2;
    return std::sqrt(dx * dx + dy * dy);
}

double within_mean(const std::vector<Point2>& pts) {
    const std::size_t n = pts.size();
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) acc += point_dist(pts[i], pts[j]);
    return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

double energy_distance(const Batch2D& x, const Batch2D& y) {
    if (x.empty() || y.empty()) throw UsageError("energy_distance: empty sample");
    double cross = 0.0;
    for (const Point2& p : x.points)
        for (const Point2& q : y.points) cross += point_dist(p, q);
    cross /= static_cast<double>(x.size()) * static_cast<double>(y.size());
    const double d2 = 2.0 * cross - within_mean(x.points) - within_mean(y.points);
    return std::max(d2, 0.0);
}

MetricReport build_report(DatasetId dataset, const std::string& fingerprint,
                          const std::vector<ModeMetrics>& measured) {
    MetricReport report;
    report.dataset = dataset;
    report.fingerprint = fingerprint;
    for (const LatentSamplingMode mode : all_modes()) {
        ModeMetrics row;
        row.mode = mode;
        for (const ModeMetrics& m : measured) {
            if (m.mode != mode) continue;
            row = m;
            row.present = true;
            break;
        }
        report.rows.push_back(row);
    }

    const ModeMetrics* sg = nullptr;
    bool sg_worst = true;
    for (const ModeMetrics& row : report.rows)
        if (row.mode == LatentSamplingMode::single_gaussian && row.present) sg = &row;
    if (sg) {
        for (const ModeMetrics& row : report.rows) {
            if (!row.present || row.mode == LatentSamplingMode::single_gaussian) continue;
            if (row.recon_mse >= sg->recon_mse) sg_worst = false;
        }
        if (sg_worst) report.flags.push_back("single_gaussian worst recon");
    }
    return report;
}

void save_report_csv(const MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "dataset,mode,recon_mse,energy_distance,runtime_s\n";
    char buf[96];
    for (const ModeMetrics& row : report.rows) {
        out << to_string(report.dataset) << "," << to_string(row.mode) << ",";
        if (row.present) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.3f\n", row.recon_mse,
                          row.energy_distance, row.runtime_s);
            out << buf;
        } else {
            out << "absent,absent,absent\n";
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_metric(const std::string& s, const std::string& file) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("bad metric '" + s + "' in " + file);
    return v;
}

}  // namespace

MetricReport load_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "dataset,mode,recon_mse,energy_distance,runtime_s")
        throw ParseError("unexpected header in " + path.string());

    MetricReport report;
    std::vector<ModeMetrics> measured;
    bool have_dataset = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 5)
            throw ParseError("wrong field count in " + path.string());
        const auto ds = dataset_from_string(fields[0]);
        if (!ds) throw ParseError("unknown dataset '" + fields[0] + "' in " + path.string());
        if (!have_dataset) {
            report.dataset = *ds;
            have_dataset = true;
        } else if (*ds != report.dataset) {
            throw ParseError("mixed datasets in " + path.string());
        }
        const auto mode = mode_from_string(fields[1]);
        if (!mode) throw ParseError("unknown mode '" + fields[1] + "' in " + path.string());
        if (fields[2] == "absent") continue;
        ModeMetrics row;
        row.mode = *mode;
        row.present = true;
        row.recon_mse = parse_metric(fields[2], path.string());
        row.energy_distance = parse_metric(fields[3], path.string());
        row.runtime_s = parse_metric(fields[4], path.string());
        measured.push_back(row);
    }
    if (!have_dataset) throw ParseError("no rows in " + path.string());
    return build_report(report.dataset, "", measured);
}

std::string format_report_table(const MetricReport& report) {
    std::ostringstream out;
    out << "dataset: " << to_string(report.dataset) << "\n";
    if (!report.fingerprint.empty()) out << "config: " << report.fingerprint << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-24s %12s %16s\n", "mode", "recon_mse",
                  "energy_distance");
    out << buf;
    for (const ModeMetrics& row : report.rows) {
        if (row.present) {
            std::snprintf(buf, sizeof buf, "%-24s %12.4f %16.4f\n", to_string(row.mode),
                          row.recon_mse, row.energy_distance);
        } else {
            std::snprintf(buf, sizeof buf, "%-24s %12s %16s\n", to_string(row.mode),
                          "absent", "absent");
        }
        out << buf;
    }
    for (const std::string& flag : report.flags) out << "flag: " << flag << "\n";
    return out.str();
}

}  // namespace scgan
