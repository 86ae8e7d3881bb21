#include "scgan/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "scgan/errors.hpp"

namespace scgan {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw UsageError("from_rows: ragged row lengths");
        std::copy(row.begin(), row.end(), m.row(i));
        ++i;
    }
    return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw UsageError(std::string(op) + ": incompatible shapes " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    Matrix c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
    const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
    Matrix c(n, m);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.row(p);
        const double* brow = b.row(p);
        for (std::size_t i = 0; i < n; ++i) {
            const double av = arow[i];
            double* crow = c.row(i);
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

bool all_finite(const Matrix& m) {
    const double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                     const std::string& col_prefix) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << col_prefix << j + 1;
    }
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::string line;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) line += ',';
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            line += buf;
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Matrix load_matrix_csv(const std::filesystem::path& path, const std::string& col_prefix) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t cols = 0;
    {
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = line.find(',', start);
            const std::string field =
                line.substr(start, comma == std::string::npos ? std::string::npos
                                                              : comma - start);
            if (field != col_prefix + std::to_string(cols + 1))
                throw ParseError("unexpected header field '" + field + "' in " +
                                 path.string());
            ++cols;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }

    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t start = 0;
        std::size_t got = 0;
        while (start <= line.size()) {
            const std::size_t comma = line.find(',', start);
            const std::string field =
                line.substr(start, comma == std::string::npos ? std::string::npos
                                                              : comma - start);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size())
                throw ParseError("bad float '" + field + "' at line " +
                                 std::to_string(line_no) + " of " + path.string());
            values.push_back(v);
            ++got;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (got != cols)
            throw ParseError("wrong field count at line " + std::to_string(line_no) +
                             " of " + path.string());
        ++rows;
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

}  // namespace scgan
