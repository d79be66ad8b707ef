#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "flst/errors.hpp"

namespace flst {

// Dense row-major matrix of doubles. The building block for network weights,
// feature batches and gradients.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    double* row(std::size_t r) { return values.data() + r * cols; }
    const double* row(std::size_t r) const { return values.data() + r * cols; }

    std::size_t size() const { return values.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const std::string& what) {
    if (m.rows != rows || m.cols != cols)
        throw ShapeError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
}

// out[r,o] += sum_k a[r,k] * b[o,k]   (a: R x K, b: O x K, out: R x O)
// Both operands are traversed along contiguous rows.
inline void matmul_abt_add(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t k_dim = a.cols;
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        double* outr = out.row(r);
        for (std::size_t o = 0; o < b.rows; ++o) {
            const double* br = b.row(o);
            double acc = 0.0;
            for (std::size_t k = 0; k < k_dim; ++k) acc += ar[k] * br[k];
            outr[o] += acc;
        }
    }
}

// out[r,k] += sum_o a[r,o] * b[o,k]   (a: R x O, b: O x K, out: R x K)
inline void matmul_ab_add(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t k_dim = b.cols;
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        double* outr = out.row(r);
        for (std::size_t o = 0; o < b.rows; ++o) {
            const double s = ar[o];
            if (s == 0.0) continue;
            const double* br = b.row(o);
            for (std::size_t k = 0; k < k_dim; ++k) outr[k] += s * br[k];
        }
    }
}

// out[o,k] += sum_r a[r,o] * b[r,k]   (a: R x O, b: R x K, out: O x K)
inline void matmul_atb_add(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t k_dim = b.cols;
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        const double* br = b.row(r);
        for (std::size_t o = 0; o < a.cols; ++o) {
            const double s = ar[o];
            if (s == 0.0) continue;
            double* outr = out.row(o);
            for (std::size_t k = 0; k < k_dim; ++k) outr[k] += s * br[k];
        }
    }
}

} // namespace flst
