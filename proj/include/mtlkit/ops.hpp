#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtlkit/matrix.hpp"
#include "mtlkit/rng.hpp"

namespace mtlkit {

// Label value for "no annotation for this task".
inline constexpr std::int8_t kMasked = -1;

// Clamp bound applied to predictions inside the cross-entropy.
inline constexpr double kBceEps = 1e-12;

// out[r][c] = sum_k x[r][k] * w[k][c] + bias[c]
Matrix affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& bias);

Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);

struct BceResult {
    double loss = 0.0;
    Matrix d_pred; // same shape as pred; exactly zero on masked rows
};

// Mean binary cross-entropy over the unmasked rows of a column of
// predictions. Rows whose target is kMasked contribute exactly zero to both
// the loss and the gradient; an all-masked batch yields loss 0.
BceResult bce_masked(const Matrix& pred, std::span<const std::int8_t> target);

// Inverted-dropout mask: entries are 0 with probability `rate`, else
// 1/(1-rate). rate must be in [0,1).
Matrix dropout_mask(int rows, int cols, double rate, Rng& rng);

} // namespace mtlkit
