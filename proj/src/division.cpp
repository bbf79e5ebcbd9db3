#include "alt/division.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace alt {

LearningState make_learning_state(std::size_t num_classes, double alpha) {
    if (num_classes < 2)
        throw std::invalid_argument("make_learning_state: need at least 2 classes");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("make_learning_state: alpha outside (0,1)");
    LearningState s;
    s.tau = 1.0 / static_cast<double>(num_classes);
    s.alpha = alpha;
    s.sigma.assign(num_classes, 0);
    s.thresholds.assign(num_classes, s.tau);
    return s;
}

double update_tau(LearningState& state, std::span<const double> max_confidences,
                  TauAggregate aggregate) {
    const double floor = 1.0 / static_cast<double>(state.sigma.size());
    if (max_confidences.empty()) {
        std::cerr << "warning: update_tau called with an empty batch; "
                     "state unchanged\n";
        return state.tau;
    }
    for (const double m : max_confidences)
        if (m < floor - 1e-9 || m > 1.0 + 1e-9)
            throw std::invalid_argument("update_tau: confidence " +
                                        std::to_string(m) + " outside [1/C, 1]");
    if (state.iteration == 0) {
        state.tau = floor;
    } else {
        double m = 0.0;
        if (aggregate == TauAggregate::max) {
            m = *std::max_element(max_confidences.begin(), max_confidences.end());
        } else {
            m = std::accumulate(max_confidences.begin(), max_confidences.end(), 0.0) /
                static_cast<double>(max_confidences.size());
        }
        state.tau = state.alpha * state.tau + (1.0 - state.alpha) * m;
    }
    ++state.iteration;
    return state.tau;
}

std::vector<std::size_t> class_learning_effect(const Matrix& bank_preds,
                                               double tau) {
    std::vector<std::size_t> sigma(bank_preds.cols, 0);
    for (std::size_t i = 0; i < bank_preds.rows; ++i) {
        const auto row = bank_preds.row(i);
        const std::size_t c = argmax(row);
        if (row[c] > tau) ++sigma[c];
    }
    return sigma;
}

Vector division_thresholds(std::span<const std::size_t> sigma) {
    const double floor = 1.0 / static_cast<double>(sigma.size());
    const std::size_t top = *std::max_element(sigma.begin(), sigma.end());
    if (top == 0) {
        std::cerr << "warning: division_thresholds with all-zero counts; "
                     "every threshold falls back to 1/C\n";
        return Vector(sigma.size(), floor);
    }
    Vector t(sigma.size());
    for (std::size_t c = 0; c < sigma.size(); ++c) {
        const double beta =
            static_cast<double>(sigma[c]) / static_cast<double>(top);
        if (beta >= 1.0 - 1e-12)
            t[c] = std::numeric_limits<double>::infinity();
        else if (beta <= 0.0)
            t[c] = floor;
        else
            t[c] = floor * (1.0 - beta / std::log(beta));
    }
    return t;
}

BatchPartition partition(const Matrix& preds, std::span<const double> thresholds,
                         DivisionMode mode) {
    if (thresholds.size() != preds.cols)
        throw std::invalid_argument("partition: one threshold per class required");
    BatchPartition out;
    for (std::size_t i = 0; i < preds.rows; ++i) {
        const auto row = preds.row(i);
        const std::size_t c = argmax(row);
        const bool confident = row[c] >= thresholds[c];
        const bool to_outlier = (mode == DivisionMode::literal) ? confident : !confident;
        (to_outlier ? out.outlier : out.inner).push_back(i);
    }
    return out;
}

} // namespace alt
