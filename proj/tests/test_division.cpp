#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "alt/division.hpp"
#include "alt/numerics.hpp"
#include "alt/rng.hpp"

namespace {

alt::Matrix matrix_from(std::size_t rows, std::size_t cols,
                        std::initializer_list<double> values) {
    alt::Matrix m(rows, cols);
    std::size_t i = 0;
    for (const double v : values) m.data[i++] = v;
    REQUIRE(i == rows * cols);
    return m;
}

alt::Matrix random_simplex_rows(std::size_t rows, std::size_t cols, alt::Rng& rng) {
    alt::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<double> logits(cols);
        for (double& v : logits) v = rng.gaussian();
        const alt::Vector p = alt::softmax(logits);
        std::copy(p.begin(), p.end(), m.row(i).begin());
    }
    return m;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

TEST_CASE("make_learning_state starts at the uniform confidence") {
    const alt::LearningState s = alt::make_learning_state(4);
    CHECK(s.tau == 0.25);
    CHECK(s.alpha == 0.9);
    CHECK(s.iteration == 0);
    REQUIRE(s.sigma.size() == 4);
    REQUIRE(s.thresholds.size() == 4);
    for (const double t : s.thresholds) CHECK(t == 0.25);

    CHECK_THROWS_AS(alt::make_learning_state(1), std::invalid_argument);
    CHECK_THROWS_AS(alt::make_learning_state(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(alt::make_learning_state(4, 0.0), std::invalid_argument);
}

TEST_CASE("update_tau pins the first step to 1/C, then smooths") {
    alt::LearningState s = alt::make_learning_state(4);
    const std::vector<double> first{0.9, 0.7};
    CHECK(alt::update_tau(s, first) == 0.25);
    CHECK(s.iteration == 1);

    // tau <- 0.9 * 0.25 + 0.1 * 0.85.
    const std::vector<double> second{0.85};
    CHECK(alt::update_tau(s, second) == doctest::Approx(0.31).epsilon(1e-12));
}

TEST_CASE("update_tau aggregates by max or mean") {
    alt::LearningState by_max = alt::make_learning_state(2);
    alt::LearningState by_mean = alt::make_learning_state(2);
    const std::vector<double> warmup{0.5};
    alt::update_tau(by_max, warmup, alt::TauAggregate::max);
    alt::update_tau(by_mean, warmup, alt::TauAggregate::mean);

    const std::vector<double> batch{0.6, 0.9};
    const double tau_max = alt::update_tau(by_max, batch, alt::TauAggregate::max);
    const double tau_mean = alt::update_tau(by_mean, batch, alt::TauAggregate::mean);
    CHECK(tau_max == doctest::Approx(0.9 * 0.5 + 0.1 * 0.9).epsilon(1e-12));
    CHECK(tau_mean == doctest::Approx(0.9 * 0.5 + 0.1 * 0.75).epsilon(1e-12));
}

TEST_CASE("update_tau matches the closed form after 100 constant steps") {
    const double alpha = 0.9;
    const double m = 0.8;
    alt::LearningState s = alt::make_learning_state(2, alpha);
    const std::vector<double> batch{m};
    alt::update_tau(s, batch); // pins tau to 0.5

    const std::size_t steps = 100;
    for (std::size_t i = 0; i < steps; ++i) alt::update_tau(s, batch);

    // tau_n = alpha^n * tau_0 + (1 - alpha^n) * m for a constant aggregate.
    const double expected = std::pow(alpha, static_cast<double>(steps)) * 0.5 +
                            (1.0 - std::pow(alpha, static_cast<double>(steps))) * m;
    CHECK(s.tau == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s.tau >= 0.5);
    CHECK(s.tau <= 1.0);
}

TEST_CASE("update_tau leaves the state unchanged on an empty batch") {
    alt::LearningState s = alt::make_learning_state(3);
    const std::vector<double> warmup{0.8};
    alt::update_tau(s, warmup);
    const double before = s.tau;
    const std::size_t iter_before = s.iteration;
    CHECK(alt::update_tau(s, std::vector<double>{}) == before);
    CHECK(s.tau == before);
    CHECK(s.iteration == iter_before);
}

TEST_CASE("update_tau rejects confidences outside [1/C, 1]") {
    alt::LearningState s = alt::make_learning_state(2);
    CHECK_THROWS_AS(alt::update_tau(s, std::vector<double>{0.3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(alt::update_tau(s, std::vector<double>{1.2}),
                    std::invalid_argument);
}

TEST_CASE("class_learning_effect counts confident rows per class") {
    const alt::Matrix preds =
        matrix_from(3, 2, {0.9, 0.1, 0.6, 0.4, 0.3, 0.7});
    const std::vector<std::size_t> sigma = alt::class_learning_effect(preds, 0.65);
    REQUIRE(sigma.size() == 2);
    CHECK(sigma[0] == 1); // only the 0.9 row clears 0.65
    CHECK(sigma[1] == 1); // the 0.7 row clears it

    // Nothing clears tau = 1.
    const std::vector<std::size_t> none = alt::class_learning_effect(preds, 1.0);
    CHECK(none == std::vector<std::size_t>{0, 0});

    // Everything clears a sub-uniform tau.
    const std::vector<std::size_t> all = alt::class_learning_effect(preds, 0.0);
    CHECK(all[0] + all[1] == 3);
}

TEST_CASE("division_thresholds hits the closed-form fixture") {
    // beta = 0.5 in a 10-class problem: T = 0.1 * (1 - 0.5 / ln 0.5).
    std::vector<std::size_t> sigma(10, 0);
    sigma[0] = 2;
    sigma[1] = 1;
    const alt::Vector t = alt::division_thresholds(sigma);
    REQUIRE(t.size() == 10);
    CHECK(t[1] == doctest::Approx(0.17213475204444817).epsilon(1e-12));
    // beta = 1 saturates to +infinity, beta = 0 falls back to 1/C.
    CHECK(std::isinf(t[0]));
    CHECK(t[0] > 0.0);
    for (std::size_t c = 2; c < 10; ++c) CHECK(t[c] == doctest::Approx(0.1));
}

TEST_CASE("division_thresholds is monotone in the relative count") {
    // With max(sigma) fixed at 100, T is nondecreasing as the count grows.
    double prev = 0.0;
    for (std::size_t count = 0; count <= 100; count += 5) {
        const std::vector<std::size_t> sigma{count, 100};
        const alt::Vector t = alt::division_thresholds(sigma);
        CHECK(t[0] >= prev);
        CHECK(t[0] >= 0.5 - 1e-12); // never below 1/C
        prev = t[0];
    }
}

TEST_CASE("division_thresholds falls back to 1/C on all-zero counts") {
    const std::vector<std::size_t> sigma{0, 0, 0, 0};
    const alt::Vector t = alt::division_thresholds(sigma);
    for (const double v : t) CHECK(v == 0.25);
}

TEST_CASE("partition routes the hand fixture by mode") {
    const alt::Matrix preds =
        matrix_from(3, 2, {0.7, 0.3, 0.55, 0.45, 0.2, 0.8});
    const alt::Vector thresholds{0.6, kInf};

    // literal: confident rows (max p >= T[argmax]) become outliers.
    const alt::BatchPartition lit =
        alt::partition(preds, thresholds, alt::DivisionMode::literal);
    CHECK(lit.outlier == std::vector<std::size_t>{0});
    CHECK(lit.inner == std::vector<std::size_t>{1, 2});

    // prose: the same comparison routes to the inner set instead.
    const alt::BatchPartition pro =
        alt::partition(preds, thresholds, alt::DivisionMode::prose);
    CHECK(pro.inner == std::vector<std::size_t>{0});
    CHECK(pro.outlier == std::vector<std::size_t>{1, 2});
}

TEST_CASE("partition extremes: infinite and uniform thresholds") {
    alt::Rng rng(14);
    const alt::Matrix preds = random_simplex_rows(8, 3, rng);

    const alt::Vector all_inf{kInf, kInf, kInf};
    const alt::BatchPartition none =
        alt::partition(preds, all_inf, alt::DivisionMode::literal);
    CHECK(none.outlier.empty());
    CHECK(none.inner.size() == 8);

    // max p >= 1/C always holds, so uniform thresholds route everything out.
    const alt::Vector uniform(3, 1.0 / 3.0);
    const alt::BatchPartition all =
        alt::partition(preds, uniform, alt::DivisionMode::literal);
    CHECK(all.inner.empty());
    CHECK(all.outlier.size() == 8);
}

TEST_CASE("partition is a disjoint cover under random inputs") {
    alt::Rng rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = 2 + static_cast<std::size_t>(rng.below(5));
        const std::size_t b = 1 + static_cast<std::size_t>(rng.below(32));
        const alt::Matrix preds = random_simplex_rows(b, c, rng);
        alt::Vector thresholds(c);
        for (double& t : thresholds)
            t = rng.uniform() < 0.2 ? kInf : rng.uniform(1.0 / c, 1.0);
        const alt::DivisionMode mode = trial % 2 == 0 ? alt::DivisionMode::literal
                                                      : alt::DivisionMode::prose;
        const alt::BatchPartition part = alt::partition(preds, thresholds, mode);

        std::vector<std::size_t> seen(part.inner);
        seen.insert(seen.end(), part.outlier.begin(), part.outlier.end());
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> expected(b);
        for (std::size_t i = 0; i < b; ++i) expected[i] = i;
        CHECK(seen == expected);
    }
}

TEST_CASE("partition requires one threshold per class") {
    const alt::Matrix preds = matrix_from(1, 3, {0.5, 0.3, 0.2});
    const alt::Vector wrong{0.5, 0.5};
    CHECK_THROWS_AS(alt::partition(preds, wrong, alt::DivisionMode::literal),
                    std::invalid_argument);
}
