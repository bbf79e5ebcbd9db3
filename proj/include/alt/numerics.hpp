#pragma once

// Dense double-precision kernels shared by every other module: simplex and
// unit-vector primitives, rank statistics, and a small exact PCA used for
// 2-D scatter exports. All functions are pure and reentrant.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace alt {

using Vector = std::vector<double>;

// Row-major dense matrix with explicit dimensions.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }

    bool operator==(const Matrix&) const = default;
};

/// Numerically stable softmax (max-subtraction). Throws on non-finite input.
Vector softmax(std::span<const double> logits);

/// Returns v / ||v||_2. Throws std::domain_error if ||v|| <= 1e-12.
Vector l2_normalized(std::span<const double> v);

/// Normalizes every row of m in place; errors name the offending row.
void l2_normalize_rows(Matrix& m);

/// Cosine similarity clamped to [-1, 1]. Throws on a near-zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Negative log-likelihood of a hard class label. Log arguments are floored
/// at 1e-12 so near-zero probabilities stay finite.
double cross_entropy(std::size_t target, std::span<const double> probs);

/// Soft-target cross entropy: -sum target[c] * log(probs[c]).
double cross_entropy(std::span<const double> target, std::span<const double> probs);

/// Spearman rank correlation with average ranks for ties.
/// Throws if lengths differ, n < 2, or either sequence is constant.
double spearman_rank_corr(std::span<const double> a, std::span<const double> b);

struct Pca2D {
    Matrix points;                            // N x 2 projections
    std::array<double, 2> explained_variance; // top-2 covariance eigenvalues
    double total_variance = 0.0;
};

/// Projects X (N x d, d >= 2, N >= 2) onto its top-2 principal directions.
/// Mean-centering is applied internally; component signs are fixed so the
/// largest-magnitude loading of each direction is positive.
Pca2D pca_project_2d(const Matrix& x);

/// Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues in
/// descending order with matching eigenvector columns.
void symmetric_eig(const Matrix& a, Vector& eigenvalues, Matrix& eigenvectors);

inline double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

/// Index of the largest entry; ties resolve to the smallest index.
std::size_t argmax(std::span<const double> v);

} // namespace alt
