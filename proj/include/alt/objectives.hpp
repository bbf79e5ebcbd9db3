#pragma once

// The three adaptation loss terms and their weighted total. All functions
// are pure: predictions come in as matrices, bank rows and weights are
// constants, and nothing here touches the network.

#include <cstddef>
#include <span>
#include <vector>

#include "alt/numerics.hpp"

namespace alt {

// Neighbor context for one sample: stored bank predictions (constants under
// differentiation) and the matching affinity weights.
struct BankNeighbors {
    Matrix preds;   // K x C rows copied from the bank
    Vector weights; // K affinities, cosine similarities or all-ones
};

struct LossReport {
    double alr = 0.0;
    double sep = 0.0;
    double air = 0.0;
    double lambda = 1.0;
    double total = 0.0;
    std::size_t inner_count = 0;
    std::size_t outlier_count = 0;
};

/// Local-consistency clustering term:
///   -sum_i sum_j weights[i][j] * dot(inner_preds[i], neighbor_preds[i][j])
/// Throws if any neighbor set does not hold exactly k rows and weights.
double alr_loss(const Matrix& inner_preds,
                std::span<const BankNeighbors> neighbors, std::size_t k);

/// Prediction dispersion over the mini-batch: the double sum of dot(p_i, p_m)
/// over ordered pairs i != m. Positive sign (dispersion = true) penalizes
/// agreement between distinct samples; dispersion = false flips the sign,
/// which rewards agreement and is kept only for auditing. Batches of fewer
/// than 2 rows score 0.
double sep_loss(const Matrix& inner_preds, bool dispersion = true);

/// Consistency term averaged over the outlier set: cross entropy between the
/// (frozen) weak-view prediction and the strong-view prediction. hard = true
/// targets the weak argmax; hard = false targets the full weak distribution.
/// An empty outlier set scores 0.
double air_loss(const Matrix& weak_preds, const Matrix& strong_preds,
                std::span<const std::size_t> outliers, bool hard = true);

/// total = alr + air + lambda * sep. Throws if any component is non-finite,
/// naming the offending term.
LossReport total_loss(double alr, double sep, double air, double lambda,
                      std::size_t inner_count = 0, std::size_t outlier_count = 0);

} // namespace alt
