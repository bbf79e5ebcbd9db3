#pragma once

// Learning-state tracking and the adaptive inner/outlier split: a smoothed
// confidence threshold, per-class counts of confidently-classified bank
// rows, and the per-class thresholds derived from them.

#include <cstddef>
#include <span>
#include <vector>

#include "alt/numerics.hpp"

namespace alt {

enum class TauAggregate { max, mean };

// The threshold assignment direction is disputed ground: `literal` sends
// confident samples (max p >= threshold) to the outlier/consistency set,
// `prose` sends them to the inner/clustering set. Both are first-class;
// literal is the default.
enum class DivisionMode { literal, prose };

struct LearningState {
    double tau = 0.0;               // smoothed confidence, in [1/C, 1]
    double alpha = 0.9;             // smoothing momentum
    std::vector<std::size_t> sigma; // per-class confident-sample counts
    Vector thresholds;              // per-class, in [1/C, +inf]
    std::size_t iteration = 0;
};

/// Fresh state for C classes: tau and all thresholds start at 1/C.
LearningState make_learning_state(std::size_t num_classes, double alpha = 0.9);

/// One smoothing step. The first call pins tau to 1/C; later calls apply
///   tau <- alpha * tau + (1 - alpha) * m
/// where m aggregates the batch's per-sample top confidences (max by
/// default, mean by config). An empty batch leaves the state unchanged and
/// logs a warning. Each confidence must lie in [1/C, 1]. Returns the new tau.
double update_tau(LearningState& state, std::span<const double> max_confidences,
                  TauAggregate aggregate = TauAggregate::max);

/// Per-class count of bank rows predicted as that class with top confidence
/// strictly above tau. Sums to the bank size when tau < 1/C (impossible for
/// valid tau) and to at most the bank size otherwise.
std::vector<std::size_t> class_learning_effect(const Matrix& bank_preds,
                                               double tau);

/// Per-class confidence thresholds from the relative learning effect
/// beta_c = sigma[c] / max(sigma):
///   T(c) = (1/C) * (1 - beta_c / ln(beta_c))
/// beta = 0 takes the limit value 1/C; beta within 1e-12 of 1 takes the
/// limit +infinity; T is monotone nondecreasing in beta. When every count is
/// zero, all thresholds fall back to 1/C and a warning is logged. Counts are
/// unsigned, so the negative-count error case cannot arise.
Vector division_thresholds(std::span<const std::size_t> sigma);

struct BatchPartition {
    std::vector<std::size_t> inner;   // positions within the batch
    std::vector<std::size_t> outlier; // complement, disjoint cover
};

/// Splits batch predictions by comparing each row's top confidence with the
/// threshold of its predicted class. literal: max(p) >= T[argmax p] routes
/// to outlier; prose: the same test routes to inner.
BatchPartition partition(const Matrix& preds, std::span<const double> thresholds,
                         DivisionMode mode);

} // namespace alt
