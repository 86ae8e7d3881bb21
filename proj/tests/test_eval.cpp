#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "scgan/errors.hpp"
#include "scgan/eval.hpp"

using namespace scgan;
using testutil::TempDir;

namespace {

Batch2D batch_of(std::vector<Point2> pts) {
    Batch2D b;
    b.points = std::move(pts);
    return b;
}

}  // namespace

TEST_CASE("mse of a batch against itself is zero") {
    const Batch2D b = sample_dataset(DatasetId::two_spirals, 100, 1);
    CHECK(mse(b, b) == 0.0);
}

TEST_CASE("a uniform shift of 0.1 in one coordinate gives mse 0.01") {
    const Batch2D a = sample_dataset(DatasetId::abs, 50, 2);
    Batch2D shifted = a;
    for (auto& p : shifted.points) p.x1 += 0.1;
    CHECK(mse(a, shifted) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("mse sums squared distances over five hand pairs") {
    const Batch2D a = batch_of({{0, 0}, {1, 0}, {0, 1}, {2, 2}, {-1, -1}});
    const Batch2D b = batch_of({{3, 4}, {1, 0}, {0, -1}, {2, 0}, {-1, 1}});
    // distances^2: 25, 0, 4, 4, 4 -> mean 7.4
    CHECK(mse(a, b) == doctest::Approx(7.4).epsilon(1e-12));
}

TEST_CASE("mse rejects mismatched or empty batches") {
    const Batch2D a = batch_of({{0, 0}});
    const Batch2D b = batch_of({{0, 0}, {1, 1}});
    CHECK_THROWS_AS(mse(a, b), UsageError);
    CHECK_THROWS_AS(mse(Batch2D{}, Batch2D{}), UsageError);
}

TEST_CASE("energy distance of identical samples is zero") {
    const Batch2D b = sample_dataset(DatasetId::checkerboard, 200, 3);
    CHECK(energy_distance(b, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy distance between two point masses is twice the distance") {
    // x = {(0,0)}, y = {(3,4)}: within terms are 0, cross term |x-y| = 5,
    // so D^2 = 2 * 5 = 10.
    const Batch2D x = batch_of({{0, 0}});
    const Batch2D y = batch_of({{3, 4}});
    CHECK(energy_distance(x, y) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("energy distance is symmetric, translation invariant, nonnegative") {
    const Batch2D a = sample_dataset(DatasetId::eight_gaussians, 150, 4);
    const Batch2D b = sample_dataset(DatasetId::two_spirals, 170, 5);
    const double d = energy_distance(a, b);
    CHECK(d == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
    CHECK(d >= 0.0);

    Batch2D a2 = a, b2 = b;
    for (auto& p : a2.points) {
        p.x1 += 2.5;
        p.x2 -= 1.0;
    }
    for (auto& p : b2.points) {
        p.x1 += 2.5;
        p.x2 -= 1.0;
    }
    CHECK(energy_distance(a2, b2) == doctest::Approx(d).epsilon(1e-9));

    CHECK_THROWS_AS(energy_distance(Batch2D{}, b), UsageError);
}

TEST_CASE("energy distance separates close from distant distributions") {
    const Batch2D base = sample_dataset(DatasetId::four_circles, 300, 6);
    const Batch2D close = sample_dataset(DatasetId::four_circles, 300, 7);
    Batch2D far = close;
    for (auto& p : far.points) p.x1 += 3.0;
    CHECK(energy_distance(base, close) < energy_distance(base, far));
}

TEST_CASE("a negative U-statistic estimate is clamped to zero") {
    // x = {(0,0), (2,0)}, y = {(1,0), (1,2)}
    // E|x-x'| = 2, E|y-y'| = 2, E|x-y| = (2 + 2 sqrt5)/4 = (1+sqrt5)/2
    // raw D^2 = (1+sqrt5) - 4 < 0, so the estimate clamps at 0.
    const Batch2D x = batch_of({{0, 0}, {2, 0}});
    const Batch2D y = batch_of({{1, 0}, {1, 2}});
    CHECK(1.0 + std::sqrt(5.0) - 4.0 < 0.0);
    CHECK(energy_distance(x, y) == 0.0);
}

TEST_CASE("hand-computed energy distance on asymmetric point masses") {
    // x = {(0,0), (0,0)} and y = {(3,4)}: within-x = 0 (identical points),
    // within-y = 0 (singleton), cross = 5, so D^2 = 10 exactly.
    const Batch2D x = batch_of({{0, 0}, {0, 0}});
    const Batch2D y = batch_of({{3, 4}});
    CHECK(energy_distance(x, y) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("build_report covers every mode in order and flags missing ones") {
    std::vector<ModeMetrics> measured;
    ModeMetrics m;
    m.mode = LatentSamplingMode::mapping_network;
    m.present = true;
    m.recon_mse = 0.01;
    m.energy_distance = 0.02;
    m.runtime_s = 1.5;
    measured.push_back(m);

    const MetricReport rep = build_report(DatasetId::abs, "cafebabe", {m});
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.dataset == DatasetId::abs);
    CHECK(rep.fingerprint == "cafebabe");
    const auto modes = all_modes();
    for (std::size_t i = 0; i < 4; ++i) CHECK(rep.rows[i].mode == modes[i]);
    int present = 0;
    for (const auto& row : rep.rows)
        if (row.present) ++present;
    CHECK(present == 1);
}

TEST_CASE("the worst-reconstruction flag fires only for the expected ordering") {
    auto make = [](LatentSamplingMode mode, double rec) {
        ModeMetrics m;
        m.mode = mode;
        m.present = true;
        m.recon_mse = rec;
        return m;
    };
    const MetricReport flagged = build_report(
        DatasetId::eight_gaussians, "f",
        {make(LatentSamplingMode::single_gaussian, 0.9),
         make(LatentSamplingMode::mapping_network, 0.1),
         make(LatentSamplingMode::real_data_latents, 0.05)});
    bool has = false;
    for (const auto& f : flagged.flags) has = has || f.find("single_gaussian") != std::string::npos;
    CHECK(has);

    const MetricReport not_flagged = build_report(
        DatasetId::eight_gaussians, "f",
        {make(LatentSamplingMode::single_gaussian, 0.01),
         make(LatentSamplingMode::mapping_network, 0.1)});
    for (const auto& f : not_flagged.flags)
        CHECK(f.find("single_gaussian worst") == std::string::npos);
}

TEST_CASE("report csv round-trips values and absent markers") {
    TempDir tmp("report");
    ModeMetrics m;
    m.mode = LatentSamplingMode::noisy_cluster_centers;
    m.present = true;
    m.recon_mse = 0.123456789012345;
    m.energy_distance = 3.25e-4;
    m.runtime_s = 12.5;
    const MetricReport rep = build_report(DatasetId::two_spirals, "00ff", {m});
    save_report_csv(rep, tmp / "report.csv");

    const std::string text = testutil::slurp(tmp / "report.csv");
    CHECK(text.find("dataset,mode,recon_mse,energy_distance,runtime_s") == 0);
    CHECK(text.find("absent") != std::string::npos);
    CHECK(text.find("two_spirals,noisy_cluster_centers") != std::string::npos);

    const MetricReport back = load_report_csv(tmp / "report.csv");
    CHECK(back.dataset == rep.dataset);
    REQUIRE(back.rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.rows[i].present == rep.rows[i].present);
        if (rep.rows[i].present) {
            CHECK(back.rows[i].recon_mse == rep.rows[i].recon_mse);
            CHECK(back.rows[i].energy_distance == rep.rows[i].energy_distance);
        }
    }
}

TEST_CASE("the text table lists one row per mode and no runtimes") {
    ModeMetrics m;
    m.mode = LatentSamplingMode::single_gaussian;
    m.present = true;
    m.recon_mse = 0.5;
    m.energy_distance = 0.25;
    m.runtime_s = 99.0;
    const MetricReport rep = build_report(DatasetId::four_circles, "ab", {m});
    const std::string table = format_report_table(rep);
    for (LatentSamplingMode mode : all_modes())
        CHECK(table.find(to_string(mode)) != std::string::npos);
    CHECK(table.find("99") == std::string::npos);
    CHECK(table.find("absent") != std::string::npos);
}
