#include "alt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace alt {

Vector knn_label_agreement(const FeatureBank& bank,
                           std::span<const std::size_t> labels,
                           std::span<const std::size_t> k_list,
                           bool all_agree) {
    if (labels.size() != bank.size())
        throw std::invalid_argument("knn_label_agreement: one label per bank row");
    Vector ratios;
    ratios.reserve(k_list.size());
    for (const std::size_t k : k_list) {
        double total = 0.0;
        for (std::size_t i = 0; i < bank.size(); ++i) {
            const KnnResult nn = knn_query(bank, i, k);
            std::size_t matches = 0;
            for (const std::size_t j : nn.indices)
                matches += labels[j] == labels[i];
            total += all_agree ? (matches == k ? 1.0 : 0.0)
                               : static_cast<double>(matches) / static_cast<double>(k);
        }
        ratios.push_back(total / static_cast<double>(bank.size()));
    }
    return ratios;
}

CosineStats class_cosine_stats(const Matrix& features,
                               std::span<const std::size_t> labels) {
    if (labels.size() != features.rows)
        throw std::invalid_argument("class_cosine_stats: one label per feature row");
    double same_sum = 0.0, across_sum = 0.0;
    std::size_t same_n = 0, across_n = 0;
    for (std::size_t i = 0; i < features.rows; ++i)
        for (std::size_t j = i + 1; j < features.rows; ++j) {
            const double c = cosine_similarity(features.row(i), features.row(j));
            if (labels[i] == labels[j]) {
                same_sum += c;
                ++same_n;
            } else {
                across_sum += c;
                ++across_n;
            }
        }
    if (same_n == 0)
        throw std::invalid_argument(
            "class_cosine_stats: no same-class pairs (every class is a singleton)");
    if (across_n == 0)
        throw std::invalid_argument(
            "class_cosine_stats: no across-class pairs (single class)");
    return {same_sum / static_cast<double>(same_n),
            across_sum / static_cast<double>(across_n)};
}

double consistency_regularizer_estimate(const ModelParams& params,
                                        const Matrix& inputs,
                                        const AugmentSpec& spec,
                                        std::size_t samples_per_point, Rng& rng) {
    if (samples_per_point == 0)
        throw std::invalid_argument(
            "consistency_regularizer_estimate: need at least 1 sample per point");
    if (inputs.rows == 0)
        throw std::invalid_argument("consistency_regularizer_estimate: empty inputs");
    validate_augment_spec(spec);
    double disagreements = 0.0;
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        const auto x = inputs.row(i);
        const std::size_t base = argmax(forward(params, x).p);
        for (std::size_t s = 0; s < samples_per_point; ++s) {
            const Vector candidate = strong_aug(x, spec, rng);
            if (argmax(forward(params, candidate).p) != base) {
                disagreements += 1.0;
                break;
            }
        }
    }
    return disagreements / static_cast<double>(inputs.rows);
}

BoundReport verify_error_bound(double measured_error, double mu, double xi) {
    if (xi == 1.0)
        throw std::invalid_argument(
            "verify_error_bound: xi = 1 makes the bound constant undefined");
    if (mu < 0.0)
        throw std::invalid_argument("verify_error_bound: negative regularizer bound");
    if (measured_error < 0.0 || measured_error > 1.0)
        throw std::invalid_argument("verify_error_bound: error outside [0, 1]");
    BoundReport rep;
    rep.measured_error = measured_error;
    rep.regularizer_bound = mu;
    rep.xi = xi;
    rep.error_bound = std::max(xi / (xi - 1.0), 2.0) * mu;
    rep.holds = measured_error <= rep.error_bound;
    return rep;
}

EvalReport evaluate(const ModelParams& params, const Dataset& ds) {
    if (ds.labels.size() != ds.inputs.rows)
        throw std::invalid_argument("evaluate: dataset is not fully labeled");
    const std::size_t c = params.num_classes;
    EvalReport rep;
    rep.confusion = Matrix(c, c, 0.0);
    for (std::size_t i = 0; i < ds.inputs.rows; ++i) {
        if (ds.labels[i] >= c)
            throw std::out_of_range("evaluate: label " + std::to_string(ds.labels[i]) +
                                    " out of range");
        const std::size_t pred = argmax(forward(params, ds.inputs.row(i)).p);
        rep.confusion.at(ds.labels[i], pred) += 1.0;
    }
    double correct = 0.0;
    rep.per_class_accuracy.assign(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
        correct += rep.confusion.at(k, k);
        double row_total = 0.0;
        for (std::size_t j = 0; j < c; ++j) row_total += rep.confusion.at(k, j);
        if (row_total > 0.0)
            rep.per_class_accuracy[k] = rep.confusion.at(k, k) / row_total;
    }
    rep.accuracy = ds.inputs.rows == 0
                       ? 0.0
                       : correct / static_cast<double>(ds.inputs.rows);
    return rep;
}

DiagnosticsReport diagnostics(const ModelParams& params, const FeatureBank& bank,
                              const Dataset& ds,
                              std::span<const std::size_t> k_list,
                              bool all_agree) {
    DiagnosticsReport rep;
    rep.k_list.assign(k_list.begin(), k_list.end());
    rep.agreement = knn_label_agreement(bank, ds.labels, k_list, all_agree);
    rep.cosine = class_cosine_stats(bank.f, ds.labels);
    rep.similarity_ratio = rep.cosine.across_class_mean != 0.0
                               ? rep.cosine.same_class_mean / rep.cosine.across_class_mean
                               : std::numeric_limits<double>::infinity();
    rep.eval = evaluate(params, ds);
    return rep;
}

} // namespace alt
