#include "alt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace alt {

namespace {
constexpr double kLogFloor = 1e-12;
constexpr double kNormEps = 1e-12;

double floored_log(double x) { return std::log(std::max(x, kLogFloor)); }
} // namespace

Vector softmax(std::span<const double> logits) {
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i]))
            throw std::domain_error("softmax: non-finite logit at index " +
                                    std::to_string(i));
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    Vector out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Vector l2_normalized(std::span<const double> v) {
    const double norm = std::sqrt(dot(v, v));
    if (norm <= kNormEps)
        throw std::domain_error("l2_normalized: near-zero vector");
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return out;
}

void l2_normalize_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        const double norm = std::sqrt(dot(row, row));
        if (norm <= kNormEps)
            throw std::runtime_error("l2_normalize_rows: near-zero vector at row " +
                                     std::to_string(r));
        for (double& x : row) x /= norm;
    }
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu <= kNormEps || nv <= kNormEps)
        throw std::domain_error("cosine_similarity: zero vector");
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double cross_entropy(std::size_t target, std::span<const double> probs) {
    if (target >= probs.size())
        throw std::invalid_argument("cross_entropy: class index out of range");
    return -floored_log(probs[target]);
}

double cross_entropy(std::span<const double> target, std::span<const double> probs) {
    if (target.size() != probs.size())
        throw std::invalid_argument("cross_entropy: dimension mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c)
        s -= target[c] * floored_log(probs[c]);
    return s;
}

namespace {

// Average ranks (1-based), ties share the mean of their positions.
Vector average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    Vector ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vector& a, const Vector& b) {
    const std::size_t n = a.size();
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw std::domain_error("spearman_rank_corr: constant sequence");
    return sab / std::sqrt(saa * sbb);
}

} // namespace

double spearman_rank_corr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("spearman_rank_corr: length mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("spearman_rank_corr: need at least 2 samples");
    return std::clamp(pearson(average_ranks(a), average_ranks(b)), -1.0, 1.0);
}

void symmetric_eig(const Matrix& a, Vector& eigenvalues, Matrix& eigenvectors) {
    const std::size_t n = a.rows;
    Matrix m = a;
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    // Cyclic Jacobi sweeps; converges quadratically for symmetric input.
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += m.at(p, q) * m.at(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m.at(k, p), mkq = m.at(k, q);
                    m.at(k, p) = c * mkp - s * mkq;
                    m.at(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m.at(p, k), mqk = m.at(q, k);
                    m.at(p, k) = c * mpk - s * mqk;
                    m.at(q, k) = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return m.at(i, i) > m.at(j, j);
    });
    eigenvalues.assign(n, 0.0);
    eigenvectors = Matrix(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        eigenvalues[j] = m.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i)
            eigenvectors.at(i, j) = v.at(i, order[j]);
    }
}

Pca2D pca_project_2d(const Matrix& x) {
    if (x.cols < 2)
        throw std::invalid_argument("pca_project_2d: need at least 2 input dimensions");
    if (x.rows < 2)
        throw std::invalid_argument("pca_project_2d: need at least 2 samples");

    const std::size_t n = x.rows, d = x.cols;
    Vector mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(i, j);
    for (double& v : mean) v /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered.at(i, j) = x.at(i, j) - mean[j];

    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = centered.at(i, a);
            for (std::size_t b = a; b < d; ++b)
                cov.at(a, b) += ca * centered.at(i, b);
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov.at(a, b) /= static_cast<double>(n - 1);
            cov.at(b, a) = cov.at(a, b);
        }

    Vector eigvals;
    Matrix eigvecs;
    symmetric_eig(cov, eigvals, eigvecs);

    Pca2D out;
    out.points = Matrix(n, 2);
    out.explained_variance = {eigvals[0], eigvals[1]};
    out.total_variance = std::accumulate(eigvals.begin(), eigvals.end(), 0.0);

    for (std::size_t comp = 0; comp < 2; ++comp) {
        // Sign convention: largest-|loading| coordinate made positive.
        std::size_t imax = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(eigvecs.at(i, comp)) > std::abs(eigvecs.at(imax, comp)))
                imax = i;
        const double sign = eigvecs.at(imax, comp) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double proj = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                proj += centered.at(i, j) * eigvecs.at(j, comp);
            out.points.at(i, comp) = sign * proj;
        }
    }
    return out;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace alt
