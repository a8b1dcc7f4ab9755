// matrix.hpp - dense row-major matrix, just enough for the network engine
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace scma::nn {

struct Matrix {
    size_t rows = 0, cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& operator()(size_t r, size_t c) { return v[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return v[r * cols + c]; }

    double* row(size_t r) { return v.data() + r * cols; }
    const double* row(size_t r) const { return v.data() + r * cols; }
    std::span<const double> row_span(size_t r) const { return {row(r), cols}; }

    size_t size() const { return v.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// C = A * B, A (n x k), B (k x m)
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (size_t k = 0; k < a.cols; ++k) {
            const double av = ai[k];
            const double* bk = b.row(k);
            for (size_t j = 0; j < b.cols; ++j) ci[j] += av * bk[j];
        }
    }
    return c;
}

// C = A^T * B, A (n x r), B (n x c); used for weight gradients X^T dZ
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: row counts differ");
    Matrix c(a.cols, b.cols);
    for (size_t n = 0; n < a.rows; ++n) {
        const double* an = a.row(n);
        const double* bn = b.row(n);
        for (size_t i = 0; i < a.cols; ++i) {
            const double av = an[i];
            double* ci = c.row(i);
            for (size_t j = 0; j < b.cols; ++j) ci[j] += av * bn[j];
        }
    }
    return c;
}

// C = A * B^T, A (n x k), B (m x k); used for input gradients dZ W^T
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_a_bt: column counts differ");
    Matrix c(a.rows, b.rows);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        for (size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

}  // namespace scma::nn
