#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scgan/matrix.hpp"

namespace scgan {

enum class DatasetId {
    eight_gaussians,
    checkerboard,
    two_spirals,
    abs,
    sinewaved_cube,
    four_circles,
};

const char* to_string(DatasetId id);
std::optional<DatasetId> dataset_from_string(std::string_view name);
std::vector<DatasetId> all_datasets();

struct Point2 {
    double x1 = 0.0;
    double x2 = 0.0;
};

struct Batch2D {
    std::vector<Point2> points;
    std::string provenance;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// Component labels (mixture mode, cell, arm, ring) kept for tests only.
struct LabeledBatch2D {
    Batch2D batch;
    std::vector<int> labels;
};

// Generator definitions, all supported inside [-4,4]^2:
//   eight_gaussians  8 isotropic Gaussians (std 0.1) at radius 2, angles k*45deg
//   checkerboard     uniform over the 4x4 unit cells of [-2,2]^2 whose cell
//                    index sum is even
//   two_spirals      t~U(0,1), r=2t, theta=3*pi*t, both arms +-(r cos, r sin),
//                    plus N(0, 0.02^2 I)
//   abs              x1~U(-2,2), x2 = |x1| + N(0, 0.05^2)
//   sinewaved_cube   x1~U(-2,2), x2 = sin(2 x1) + U(-0.4, 0.4)
//   four_circles     rings of radius 0.75 at (+-1.5, +-1.5), uniform angle,
//                    radial noise N(0, 0.05^2)
Batch2D sample_dataset(DatasetId id, std::size_t n, std::uint64_t seed);
LabeledBatch2D sample_dataset_labeled(DatasetId id, std::size_t n, std::uint64_t seed);

// Disjoint shuffled partition with sizes ceil(f*n) and n - ceil(f*n).
std::pair<Batch2D, Batch2D> split(const Batch2D& batch, double train_fraction,
                                  std::uint64_t seed);

// Independent N(0, sigma^2 I) perturbation of every point.
Batch2D augment(const Batch2D& batch, double sigma, std::uint64_t seed);

// CSV with header "x1,x2", 17-significant-digit floats.
void save_batch(const Batch2D& batch, const std::filesystem::path& path);
Batch2D load_batch(const std::filesystem::path& path);

Matrix to_matrix(const Batch2D& batch);
Batch2D from_matrix(const Matrix& m, std::string provenance);

}  // namespace scgan
