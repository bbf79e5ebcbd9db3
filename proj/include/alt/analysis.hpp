#pragma once

// Read-only diagnostics: neighbor label agreement, class-wise cosine
// statistics, a Monte-Carlo estimate of the prediction-consistency
// regularizer, the matching error-bound audit, and accuracy reporting.
// Nothing here feeds back into training; this is the only code that may
// read target labels.

#include <cstddef>
#include <span>
#include <vector>

#include "alt/bank.hpp"
#include "alt/data.hpp"
#include "alt/model.hpp"
#include "alt/numerics.hpp"
#include "alt/rng.hpp"

namespace alt {

/// For each K in k_list, the fraction of bank rows whose K nearest
/// neighbors all carry the row's reference label (all_agree = true), or the
/// mean fraction of matching neighbors (all_agree = false). Every K must be
/// in [1, bank size - 1]. The all-agree ratio is non-increasing in K.
Vector knn_label_agreement(const FeatureBank& bank,
                           std::span<const std::size_t> labels,
                           std::span<const std::size_t> k_list,
                           bool all_agree = true);

struct CosineStats {
    double same_class_mean = 0.0;
    double across_class_mean = 0.0;
};

/// Mean cosine similarity over all unordered same-class pairs and all
/// across-class pairs. Throws when either pair set is empty.
CosineStats class_cosine_stats(const Matrix& features,
                               std::span<const std::size_t> labels);

/// Monte-Carlo estimate in [0, 1] of the chance that a point has some
/// augmented neighbor classified differently: per row, draw
/// samples_per_point strong views and report 1 if any view's argmax differs
/// from the row's own; average over rows.
double consistency_regularizer_estimate(const ModelParams& params,
                                        const Matrix& inputs,
                                        const AugmentSpec& spec,
                                        std::size_t samples_per_point, Rng& rng);

struct BoundReport {
    double measured_error = 0.0;
    double regularizer_bound = 0.0; // mu
    double xi = 0.0;
    double error_bound = 0.0;       // max(xi / (xi - 1), 2) * mu
    bool holds = false;
};

/// Audits measured_error <= max(xi / (xi - 1), 2) * mu. Validation report
/// only; training never consults it. Throws when xi = 1 (the constant is
/// undefined there) or mu < 0.
BoundReport verify_error_bound(double measured_error, double mu, double xi);

struct EvalReport {
    double accuracy = 0.0;
    Vector per_class_accuracy; // classes absent from the data score 0
    Matrix confusion;          // row: reference label, column: prediction
};

/// Argmax predictions against the dataset labels. accuracy equals
/// trace(confusion) / N exactly.
EvalReport evaluate(const ModelParams& params, const Dataset& ds);

// One-stop bundle for the analyze command and the ablation summary.
struct DiagnosticsReport {
    std::vector<std::size_t> k_list;
    Vector agreement;               // per K, same order as k_list
    CosineStats cosine;
    double similarity_ratio = 0.0;  // same / across, meaningful when across > 0
    EvalReport eval;
};

DiagnosticsReport diagnostics(const ModelParams& params, const FeatureBank& bank,
                              const Dataset& ds,
                              std::span<const std::size_t> k_list,
                              bool all_agree = true);

} // namespace alt
