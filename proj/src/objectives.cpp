#include "alt/objectives.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace alt {

double alr_loss(const Matrix& inner_preds,
                std::span<const BankNeighbors> neighbors, std::size_t k) {
    if (neighbors.size() != inner_preds.rows)
        throw std::invalid_argument("alr_loss: one neighbor set per sample required");
    double loss = 0.0;
    for (std::size_t i = 0; i < inner_preds.rows; ++i) {
        const BankNeighbors& nb = neighbors[i];
        if (nb.preds.rows != k || nb.weights.size() != k)
            throw std::invalid_argument(
                "alr_loss: neighbor count mismatch at sample " + std::to_string(i) +
                " (expected " + std::to_string(k) + ")");
        for (std::size_t j = 0; j < k; ++j)
            loss -= nb.weights[j] * dot(inner_preds.row(i), nb.preds.row(j));
    }
    return loss;
}

double sep_loss(const Matrix& inner_preds, bool dispersion) {
    if (inner_preds.rows < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < inner_preds.rows; ++i)
        for (std::size_t m = 0; m < inner_preds.rows; ++m)
            if (m != i) s += dot(inner_preds.row(i), inner_preds.row(m));
    return dispersion ? s : -s;
}

double air_loss(const Matrix& weak_preds, const Matrix& strong_preds,
                std::span<const std::size_t> outliers, bool hard) {
    if (outliers.empty()) return 0.0;
    if (weak_preds.rows != strong_preds.rows || weak_preds.cols != strong_preds.cols)
        throw std::invalid_argument("air_loss: prediction shape mismatch");
    double s = 0.0;
    for (std::size_t i : outliers) {
        if (i >= weak_preds.rows)
            throw std::out_of_range("air_loss: outlier index " + std::to_string(i) +
                                    " out of range");
        if (hard)
            s += cross_entropy(argmax(weak_preds.row(i)), strong_preds.row(i));
        else
            s += cross_entropy(weak_preds.row(i), strong_preds.row(i));
    }
    return s / static_cast<double>(outliers.size());
}

LossReport total_loss(double alr, double sep, double air, double lambda,
                      std::size_t inner_count, std::size_t outlier_count) {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("total_loss: non-finite ") + name);
    };
    check(alr, "alr");
    check(sep, "sep");
    check(air, "air");
    check(lambda, "lambda");
    LossReport r;
    r.alr = alr;
    r.sep = sep;
    r.air = air;
    r.lambda = lambda;
    r.total = alr + air + lambda * sep;
    r.inner_count = inner_count;
    r.outlier_count = outlier_count;
    return r;
}

} // namespace alt
