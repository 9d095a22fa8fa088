#include "mtlkit/ops.hpp"

#include <algorithm>
#include <cmath>

namespace mtlkit {

Matrix affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& bias) {
    if (x.cols != w.rows)
        throw NumericError("affine_forward: input width " + std::to_string(x.cols) +
                           " does not match weight rows " + std::to_string(w.rows));
    if (bias.size() != static_cast<std::size_t>(w.cols))
        throw NumericError("affine_forward: bias length does not match output width");
    Matrix out = matmul(x, w);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) out(r, c) += bias[c];
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::max(0.0, x.data[i]);
    return out;
}

Matrix sigmoid(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        if (v >= 0.0) {
            out.data[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            out.data[i] = e / (1.0 + e);
        }
    }
    return out;
}

BceResult bce_masked(const Matrix& pred, std::span<const std::int8_t> target) {
    if (pred.cols != 1)
        throw NumericError("bce_masked: pred must be a column");
    if (target.size() != static_cast<std::size_t>(pred.rows))
        throw NumericError("bce_masked: target length does not match pred rows");

    int unmasked = 0;
    for (std::int8_t t : target)
        if (t != kMasked) ++unmasked;

    BceResult res;
    res.d_pred = Matrix(pred.rows, 1);
    if (unmasked == 0) return res;

    const double inv_m = 1.0 / static_cast<double>(unmasked);
    double loss = 0.0;
    for (int r = 0; r < pred.rows; ++r) {
        if (target[r] == kMasked) continue;
        const double y = static_cast<double>(target[r]);
        const double p = std::clamp(pred(r, 0), kBceEps, 1.0 - kBceEps);
        loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        res.d_pred(r, 0) = (-y / p + (1.0 - y) / (1.0 - p)) * inv_m;
    }
    res.loss = loss * inv_m;
    return res;
}

Matrix dropout_mask(int rows, int cols, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw NumericError("dropout_mask: rate must be in [0,1)");
    Matrix mask(rows, cols);
    if (rate == 0.0) {
        std::fill(mask.data.begin(), mask.data.end(), 1.0);
        return mask;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : mask.data) v = (uniform_double(rng) < rate) ? 0.0 : keep_scale;
    return mask;
}

} // namespace mtlkit
