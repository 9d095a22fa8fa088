#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtlkit/errors.hpp"

namespace mtlkit {

// Dense row-major matrix of doubles. The only tensor type in the project.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw NumericError("Matrix: data size does not match shape");
    }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const;
    double squared_norm() const;
};

bool operator==(const Matrix& a, const Matrix& b);

// out = a * b, ikj loop order.
Matrix matmul(const Matrix& a, const Matrix& b);
// out = a^T * b without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// out = a * b^T.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

void add_scaled(Matrix& dst, const Matrix& src, double scale);
Matrix hadamard(const Matrix& a, const Matrix& b);

} // namespace mtlkit
