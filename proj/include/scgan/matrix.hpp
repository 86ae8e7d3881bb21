#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace scgan {

// Dense row-major matrix of doubles. Batches put one sample per row.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    void fill(double v);
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // [n,k] x [k,m]
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T, [n,k] x [m,k]
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b, [k,n] x [k,m]

bool all_finite(const Matrix& m);

// CSV round-trip with header "<prefix>1,...,<prefix>C" and 17-significant-digit
// values.
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                     const std::string& col_prefix);
Matrix load_matrix_csv(const std::filesystem::path& path, const std::string& col_prefix);

}  // namespace scgan
