#include "alt/bank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace alt {

namespace {

void check_simplex_row(std::span<const double> row, std::size_t where) {
    double sum = 0.0;
    for (const double v : row) {
        if (v < -1e-9)
            throw std::invalid_argument("bank: negative probability at row " +
                                        std::to_string(where));
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("bank: probability row " + std::to_string(where) +
                                    " sums to " + std::to_string(sum));
}

} // namespace

FeatureBank init_bank(const ModelParams& params, const Matrix& inputs) {
    if (inputs.rows == 0)
        throw std::invalid_argument("init_bank: empty input set");
    FeatureBank bank;
    forward_batch(params, inputs, &bank.f, &bank.p);
    l2_normalize_rows(bank.f);
    return bank;
}

void update_bank(FeatureBank& bank, std::span<const std::size_t> indices,
                 const Matrix& z_batch, const Matrix& p_batch) {
    if (indices.size() != z_batch.rows || indices.size() != p_batch.rows)
        throw std::invalid_argument("update_bank: batch row count mismatch");
    if (z_batch.cols != bank.f.cols || p_batch.cols != bank.p.cols)
        throw std::invalid_argument("update_bank: column count mismatch");
    std::unordered_set<std::size_t> seen;
    for (const std::size_t i : indices) {
        if (i >= bank.size())
            throw std::out_of_range("update_bank: index " + std::to_string(i) +
                                    " out of range");
        if (!seen.insert(i).second)
            throw std::invalid_argument("update_bank: duplicate index " +
                                        std::to_string(i));
    }
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const std::size_t i = indices[b];
        const Vector z = l2_normalized(z_batch.row(b));
        check_simplex_row(p_batch.row(b), i);
        std::copy(z.begin(), z.end(), bank.f.row(i).begin());
        auto p = p_batch.row(b);
        std::copy(p.begin(), p.end(), bank.p.row(i).begin());
    }
}

KnnResult knn_query(const FeatureBank& bank, std::size_t query, std::size_t k) {
    const std::size_t n = bank.size();
    if (query >= n)
        throw std::out_of_range("knn_query: query index out of range");
    if (k < 1 || k > n - 1)
        throw std::invalid_argument("knn_query: k must be in [1, " +
                                    std::to_string(n - 1) + "], got " +
                                    std::to_string(k));

    struct Scored {
        double sim;
        std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(n - 1);
    const auto q = bank.f.row(query);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == query) continue;
        scored.push_back({dot(q, bank.f.row(j)), j});
    }
    const auto better = [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.index < b.index;
    };
    std::nth_element(scored.begin(), scored.begin() + (k - 1), scored.end(), better);
    std::sort(scored.begin(), scored.begin() + k, better);

    KnnResult out;
    out.indices.reserve(k);
    out.similarities.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        out.indices.push_back(scored[j].index);
        out.similarities.push_back(scored[j].sim);
    }
    return out;
}

} // namespace alt
