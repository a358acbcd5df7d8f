#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/rng.hpp"

namespace provdet {

// Dense row-major matrix of doubles. Double precision throughout so the
// finite-difference gradient checks are clean.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
    std::span<double> row_span(int r) { return {row(r), static_cast<std::size_t>(cols)}; }
    std::span<const double> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols)}; }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// Glorot-style uniform init in ±sqrt(6 / (fan_in + fan_out)).
inline void init_uniform(Matrix& m, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : m.v) x = rng.uniform(-bound, bound);
}

// y = A x (y sized A.rows).
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
    if (static_cast<int>(x.size()) != a.cols || static_cast<int>(y.size()) != a.rows)
        throw ShapeMismatch("matvec: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                            " * " + std::to_string(x.size()));
    for (int r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        double acc = 0.0;
        for (int c = 0; c < a.cols; ++c) acc += ar[c] * x[c];
        y[r] = acc;
    }
}

// y = A^T x (y sized A.cols); accumulates into y.
inline void matvec_transpose_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    if (static_cast<int>(x.size()) != a.rows || static_cast<int>(y.size()) != a.cols)
        throw ShapeMismatch("matvec_transpose");
    for (int r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (int c = 0; c < a.cols; ++c) y[c] += xr * ar[c];
    }
}

// A += alpha * x y^T.
inline void outer_add(Matrix& a, std::span<const double> x, std::span<const double> y,
                      double alpha = 1.0) {
    for (int r = 0; r < a.rows; ++r) {
        double* ar = a.row(r);
        const double xr = alpha * x[r];
        if (xr == 0.0) continue;
        for (int c = 0; c < a.cols; ++c) ar[c] += xr * y[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void check_finite(std::span<const double> values, const char* what) {
    for (double x : values)
        if (!std::isfinite(x)) throw Error(std::string("non-finite value in ") + what);
}

}  // namespace provdet
