#pragma once

// Memory bank over the whole target set: unit-norm embeddings paired with
// the predictions they produced, plus exact cosine K-nearest-neighbor
// retrieval. Banks are rebuilt once per run and patched row-wise afterwards.

#include <cstddef>
#include <span>
#include <vector>

#include "alt/model.hpp"
#include "alt/numerics.hpp"

namespace alt {

struct FeatureBank {
    Matrix f; // N x d, every row unit norm
    Matrix p; // N x C, every row on the simplex

    std::size_t size() const { return f.rows; }
};

/// One forward pass over all rows of inputs; row i of the bank describes
/// input row i. Embeddings are l2-normalized on insertion. Throws on an
/// empty input set.
FeatureBank init_bank(const ModelParams& params, const Matrix& inputs);

/// Replaces the addressed rows with the (normalized) embeddings and
/// predictions; all other rows stay untouched. Indices must be in range and
/// unique within the call.
void update_bank(FeatureBank& bank, std::span<const std::size_t> indices,
                 const Matrix& z_batch, const Matrix& p_batch);

struct KnnResult {
    std::vector<std::size_t> indices; // K bank rows, similarity descending
    Vector similarities;              // matching cosine values
};

/// The K bank rows most similar to row `query`, excluding the row itself.
/// Exact brute-force scan; ties resolve to the smaller index. Requires
/// 1 <= k <= size - 1.
KnnResult knn_query(const FeatureBank& bank, std::size_t query, std::size_t k);

} // namespace alt
