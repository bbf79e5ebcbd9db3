#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "alt/analysis.hpp"
#include "alt/bank.hpp"
#include "alt/data.hpp"
#include "alt/model.hpp"
#include "alt/numerics.hpp"
#include "alt/rng.hpp"

namespace {

alt::Matrix unit_vectors_at_degrees(std::initializer_list<double> degrees) {
    alt::Matrix m(degrees.size(), 2);
    std::size_t i = 0;
    for (const double d : degrees) {
        const double a = d * std::numbers::pi / 180.0;
        m.at(i, 0) = std::cos(a);
        m.at(i, 1) = std::sin(a);
        ++i;
    }
    return m;
}

alt::FeatureBank bank_with_features(alt::Matrix f) {
    alt::FeatureBank bank;
    bank.p = alt::Matrix(f.rows, 2, 0.5);
    bank.f = std::move(f);
    return bank;
}

// Two tight angular triangles far apart; one member of the first triangle
// carries the second triangle's label, so exactly two K=1 lookups disagree.
const std::initializer_list<double> kSixAngles{0.0, 10.0, 16.0, 90.0, 100.0, 106.0};
const std::vector<std::size_t> kSixLabels{0, 0, 1, 1, 1, 1};

// A linear-boundary model: tanh layers preserve the sign of x0 and the
// classifier reads it out, so the prediction is 0 iff x0 > 0 (ties go to 0).
alt::ModelParams sign_model() {
    alt::ModelParams p;
    p.input_dim = 2;
    p.hidden_dim = 2;
    p.feature_dim = 2;
    p.bottleneck_dim = 0;
    p.num_classes = 2;
    p.l1.w = alt::Matrix(2, 2, 0.0);
    p.l1.w.at(0, 0) = 1.0;
    p.l1.w.at(1, 1) = 1.0;
    p.l1.b.assign(2, 0.0);
    p.l2.w = p.l1.w;
    p.l2.b.assign(2, 0.0);
    p.classifier.w = alt::Matrix(2, 2, 0.0);
    p.classifier.w.at(0, 0) = 4.0;
    p.classifier.w.at(1, 0) = -4.0;
    p.classifier.b.assign(2, 0.0);
    return p;
}

alt::Dataset dataset_from(alt::Matrix inputs, std::vector<std::size_t> labels) {
    alt::Dataset ds;
    ds.inputs = std::move(inputs);
    ds.labels = std::move(labels);
    ds.domain = "fixture";
    return ds;
}

} // namespace

TEST_CASE("knn_label_agreement scores the six-point fixture at K=1") {
    const alt::FeatureBank bank =
        bank_with_features(unit_vectors_at_degrees(kSixAngles));
    const std::vector<std::size_t> k1{1};
    const alt::Vector agree = alt::knn_label_agreement(bank, kSixLabels, k1);
    REQUIRE(agree.size() == 1);
    CHECK(agree[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("knn_label_agreement at K=2: all-agree vs per-neighbor fraction") {
    const alt::FeatureBank bank =
        bank_with_features(unit_vectors_at_degrees(kSixAngles));
    const std::vector<std::size_t> k2{2};

    // All-agree: only the second triangle's rows survive both lookups.
    const alt::Vector strict = alt::knn_label_agreement(bank, kSixLabels, k2, true);
    CHECK(strict[0] == doctest::Approx(3.0 / 6.0).epsilon(1e-12));

    // Fraction: (1/2 + 1/2 + 0 + 1 + 1 + 1) / 6.
    const alt::Vector frac = alt::knn_label_agreement(bank, kSixLabels, k2, false);
    CHECK(frac[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("all-agree agreement is non-increasing in K") {
    alt::Rng rng(3);
    alt::Matrix f(24, 4);
    for (double& v : f.data) v = rng.gaussian();
    alt::l2_normalize_rows(f);
    const alt::FeatureBank bank = bank_with_features(std::move(f));
    std::vector<std::size_t> labels(24);
    for (std::size_t i = 0; i < 24; ++i)
        labels[i] = static_cast<std::size_t>(rng.below(3));

    const std::vector<std::size_t> ks{1, 2, 3, 5, 8, 12};
    const alt::Vector agree = alt::knn_label_agreement(bank, labels, ks, true);
    for (std::size_t i = 1; i < agree.size(); ++i) CHECK(agree[i] <= agree[i - 1]);
}

TEST_CASE("agreement over orthogonal features matches the label prior to the Kth power") {
    // All similarities tie at zero, so every row's neighbor list is the
    // first K other indices; with iid uniform labels the expected all-agree
    // ratio is (1/2)^K. Monte-Carlo average over many relabelings.
    alt::Matrix eye(8, 8, 0.0);
    for (std::size_t i = 0; i < 8; ++i) eye.at(i, i) = 1.0;
    const alt::FeatureBank bank = bank_with_features(std::move(eye));

    alt::Rng rng(4);
    const int resamples = 10000;
    double sum_k1 = 0.0, sum_k2 = 0.0;
    const std::vector<std::size_t> ks{1, 2};
    for (int r = 0; r < resamples; ++r) {
        std::vector<std::size_t> labels(8);
        for (std::size_t& l : labels) l = static_cast<std::size_t>(rng.below(2));
        const alt::Vector agree = alt::knn_label_agreement(bank, labels, ks, true);
        sum_k1 += agree[0];
        sum_k2 += agree[1];
    }
    CHECK(sum_k1 / resamples == doctest::Approx(0.5).epsilon(0.02));
    CHECK(sum_k2 / resamples == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("knn_label_agreement validates K and the label count") {
    const alt::FeatureBank bank =
        bank_with_features(unit_vectors_at_degrees(kSixAngles));
    const std::vector<std::size_t> zero{0};
    CHECK_THROWS_AS(alt::knn_label_agreement(bank, kSixLabels, zero),
                    std::invalid_argument);
    const std::vector<std::size_t> too_big{6};
    CHECK_THROWS_AS(alt::knn_label_agreement(bank, kSixLabels, too_big),
                    std::invalid_argument);
    const std::vector<std::size_t> short_labels{0, 1};
    const std::vector<std::size_t> k1{1};
    CHECK_THROWS_AS(alt::knn_label_agreement(bank, short_labels, k1),
                    std::invalid_argument);
}

TEST_CASE("class_cosine_stats matches the four-vector fixture") {
    const alt::Matrix f = unit_vectors_at_degrees({0.0, 60.0, 90.0, 180.0});
    const std::vector<std::size_t> labels{0, 0, 1, 1};
    const alt::CosineStats stats = alt::class_cosine_stats(f, labels);
    // Same-class pairs: cos(60) and cos(90) average to 0.25.
    CHECK(stats.same_class_mean == doctest::Approx(0.25).epsilon(1e-12));
    // Across pairs: cos(90), cos(180), cos(30), cos(120).
    CHECK(stats.across_class_mean ==
          doctest::Approx(-0.15849364905389033).epsilon(1e-12));
}

TEST_CASE("class_cosine_stats on ideal and collapsed geometries") {
    alt::Matrix ideal(4, 2, 0.0);
    ideal.at(0, 0) = 1.0;
    ideal.at(1, 0) = 1.0;
    ideal.at(2, 1) = 1.0;
    ideal.at(3, 1) = 1.0;
    const std::vector<std::size_t> labels{0, 0, 1, 1};
    const alt::CosineStats separated = alt::class_cosine_stats(ideal, labels);
    CHECK(separated.same_class_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(separated.across_class_mean == doctest::Approx(0.0).epsilon(1e-12));

    const alt::Matrix collapsed(4, 2, 0.5);
    const alt::CosineStats merged = alt::class_cosine_stats(collapsed, labels);
    CHECK(merged.same_class_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(merged.across_class_mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("class_cosine_stats is rotation invariant") {
    const alt::Matrix f = unit_vectors_at_degrees({0.0, 25.0, 110.0, 205.0});
    const alt::Matrix g = unit_vectors_at_degrees({33.0, 58.0, 143.0, 238.0});
    const std::vector<std::size_t> labels{0, 1, 0, 1};
    const alt::CosineStats a = alt::class_cosine_stats(f, labels);
    const alt::CosineStats b = alt::class_cosine_stats(g, labels);
    CHECK(a.same_class_mean == doctest::Approx(b.same_class_mean).epsilon(1e-9));
    CHECK(a.across_class_mean == doctest::Approx(b.across_class_mean).epsilon(1e-9));
}

TEST_CASE("class_cosine_stats needs both pair kinds") {
    const alt::Matrix f = unit_vectors_at_degrees({0.0, 45.0});
    const std::vector<std::size_t> same{0, 0};
    CHECK_THROWS_AS(alt::class_cosine_stats(f, same), std::invalid_argument);
    const std::vector<std::size_t> distinct{0, 1};
    CHECK_THROWS_AS(alt::class_cosine_stats(f, distinct), std::invalid_argument);
}

TEST_CASE("consistency estimate is 0 for a constant classifier or null views") {
    alt::Rng setup(5);
    alt::ModelParams constant = alt::make_model(2, 4, 3, 0, 2, setup);
    std::fill(constant.classifier.w.data.begin(), constant.classifier.w.data.end(),
              0.0);
    alt::Matrix inputs(6, 2);
    for (double& v : inputs.data) v = setup.gaussian();

    alt::AugmentSpec spec;
    spec.mask_fraction = 0.0;
    alt::Rng rng(6);
    CHECK(alt::consistency_regularizer_estimate(constant, inputs, spec, 8, rng) ==
          0.0);

    // Identity views cannot flip any prediction.
    alt::ModelParams model = alt::make_model(2, 4, 3, 0, 2, setup);
    alt::AugmentSpec identity;
    identity.weak_sd = 0.0;
    identity.strong_sd = 0.0;
    identity.mask_fraction = 0.0;
    identity.scale_lo = 1.0;
    identity.scale_hi = 1.0;
    alt::Rng rng2(7);
    CHECK(alt::consistency_regularizer_estimate(model, inputs, identity, 8, rng2) ==
          0.0);
}

TEST_CASE("consistency estimate matches the Gaussian crossing oracle") {
    // Points at (+-0.1, 0) against the boundary x0 = 0. A strong view flips
    // the sign with probability erfc(delta / (sd * sqrt(2))) / 2 per draw;
    // the per-point flag rate is 1 - (1 - p)^m. Scaling never crosses zero
    // and masking is off, so the oracle is exact.
    const alt::ModelParams model = sign_model();
    const double delta = 0.1;
    const std::size_t n = 1000;
    alt::Matrix inputs(n, 2, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        inputs.at(i, 0) = (i % 2 == 0) ? delta : -delta;

    alt::AugmentSpec spec;
    spec.weak_sd = 0.05;
    spec.strong_sd = 0.15;
    spec.mask_fraction = 0.0;
    spec.feature_scale = 1.0;

    const double p_cross = 0.5 * std::erfc(delta / (0.15 * std::sqrt(2.0)));
    const std::size_t m = 16;
    const double oracle = 1.0 - std::pow(1.0 - p_cross, static_cast<double>(m));

    alt::Rng rng(8);
    const double estimate =
        alt::consistency_regularizer_estimate(model, inputs, spec, m, rng);
    CHECK(std::abs(estimate - oracle) < 0.02);
}

TEST_CASE("consistency estimate is monotone in the view magnitude") {
    // Paired streams: the same draws scaled by a larger sd can only move
    // points further across the boundary, so the estimate never drops. One
    // view per point keeps the streams aligned; the estimator stops sampling
    // a point at its first flip, so multi-view consumption varies with sd.
    const alt::ModelParams model = sign_model();
    alt::Matrix inputs(100, 2, 0.0);
    for (std::size_t i = 0; i < 100; ++i)
        inputs.at(i, 0) = (i % 2 == 0) ? 0.1 : -0.1;

    double prev = -1.0;
    for (int step = 1; step <= 20; ++step) {
        alt::AugmentSpec spec;
        spec.weak_sd = 0.001;
        spec.strong_sd = 0.02 * static_cast<double>(step);
        spec.mask_fraction = 0.0;
        spec.feature_scale = 1.0;
        alt::Rng rng(99);
        const double est =
            alt::consistency_regularizer_estimate(model, inputs, spec, 1, rng);
        CHECK(est >= prev);
        CHECK(est >= 0.0);
        CHECK(est <= 1.0);
        prev = est;
    }
}

TEST_CASE("consistency estimate validates its arguments") {
    const alt::ModelParams model = sign_model();
    alt::Matrix inputs(2, 2, 0.5);
    alt::AugmentSpec spec;
    alt::Rng rng(9);
    CHECK_THROWS_AS(
        alt::consistency_regularizer_estimate(model, inputs, spec, 0, rng),
        std::invalid_argument);
    CHECK_THROWS_AS(
        alt::consistency_regularizer_estimate(model, alt::Matrix(0, 2), spec, 4, rng),
        std::invalid_argument);
}

TEST_CASE("verify_error_bound applies max(xi/(xi-1), 2) * mu") {
    const alt::BoundReport r = alt::verify_error_bound(0.15, 0.1, 2.0);
    CHECK(r.error_bound == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(r.holds);

    const alt::BoundReport v = alt::verify_error_bound(0.25, 0.1, 2.0);
    CHECK_FALSE(v.holds);

    // Small xi tightens through xi/(xi-1); large xi bottoms out at 2.
    CHECK(alt::verify_error_bound(0.0, 0.1, 1.5).error_bound ==
          doctest::Approx(0.3).epsilon(1e-12));
    CHECK(alt::verify_error_bound(0.0, 0.1, 100.0).error_bound ==
          doctest::Approx(0.2).epsilon(1e-12));

    // mu = 0 forces a zero bound: only a perfect model satisfies it.
    CHECK(alt::verify_error_bound(0.0, 0.0, 2.0).holds);
    CHECK_FALSE(alt::verify_error_bound(0.1, 0.0, 2.0).holds);

    CHECK_THROWS_AS(alt::verify_error_bound(0.1, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(alt::verify_error_bound(0.1, -0.1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(alt::verify_error_bound(1.5, 0.1, 2.0), std::invalid_argument);
}

TEST_CASE("evaluate reports accuracy, per-class rates, and the confusion matrix") {
    const alt::ModelParams model = sign_model();
    // Two correct rows, two sign errors.
    alt::Matrix inputs(4, 2, 0.0);
    inputs.at(0, 0) = 1.0;  // label 0, predicted 0
    inputs.at(1, 0) = -1.0; // label 1, predicted 1
    inputs.at(2, 0) = 2.0;  // label 1, predicted 0
    inputs.at(3, 0) = -2.0; // label 0, predicted 1
    const alt::Dataset ds = dataset_from(std::move(inputs), {0, 1, 1, 0});

    const alt::EvalReport rep = alt::evaluate(model, ds);
    CHECK(rep.accuracy == 0.5);
    REQUIRE(rep.per_class_accuracy.size() == 2);
    CHECK(rep.per_class_accuracy[0] == 0.5);
    CHECK(rep.per_class_accuracy[1] == 0.5);
    REQUIRE(rep.confusion.rows == 2);
    CHECK(rep.confusion.at(0, 0) == 1.0);
    CHECK(rep.confusion.at(0, 1) == 1.0);
    CHECK(rep.confusion.at(1, 0) == 1.0);
    CHECK(rep.confusion.at(1, 1) == 1.0);

    // accuracy is exactly trace / N.
    CHECK(rep.accuracy ==
          (rep.confusion.at(0, 0) + rep.confusion.at(1, 1)) / 4.0);
}

TEST_CASE("evaluate covers perfect, constant, and missing-class datasets") {
    const alt::ModelParams model = sign_model();

    alt::Matrix good(4, 2, 0.0);
    good.at(0, 0) = 1.0;
    good.at(1, 0) = 2.0;
    good.at(2, 0) = -1.0;
    good.at(3, 0) = -2.0;
    const alt::EvalReport perfect =
        alt::evaluate(model, dataset_from(std::move(good), {0, 0, 1, 1}));
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.confusion.at(0, 1) == 0.0);
    CHECK(perfect.confusion.at(1, 0) == 0.0);

    // A zeroed classifier always answers class 0 (argmax tie-break).
    alt::Rng rng(10);
    alt::ModelParams constant = alt::make_model(2, 4, 3, 0, 2, rng);
    std::fill(constant.classifier.w.data.begin(), constant.classifier.w.data.end(),
              0.0);
    alt::Matrix half(4, 2, 0.3);
    const alt::EvalReport chance =
        alt::evaluate(constant, dataset_from(std::move(half), {0, 0, 1, 1}));
    CHECK(chance.accuracy == 0.5);
    CHECK(chance.per_class_accuracy[0] == 1.0);
    CHECK(chance.per_class_accuracy[1] == 0.0);

    // A class absent from the labels scores 0, not NaN.
    alt::Matrix only_zero(2, 2, 0.0);
    only_zero.at(0, 0) = 1.0;
    only_zero.at(1, 0) = 2.0;
    const alt::EvalReport absent =
        alt::evaluate(model, dataset_from(std::move(only_zero), {0, 0}));
    CHECK(absent.per_class_accuracy[1] == 0.0);
    CHECK(absent.accuracy == 1.0);
}

TEST_CASE("diagnostics bundles the individual reports consistently") {
    alt::Rng rng(11);
    const alt::ModelParams model = alt::make_model(2, 6, 4, 0, 2, rng);
    const alt::Dataset ds = alt::gen_two_moons(20, 0.08, 0.0, 12);
    const alt::FeatureBank bank = alt::init_bank(model, ds.inputs);
    const std::vector<std::size_t> ks{1, 3};

    const alt::DiagnosticsReport rep = alt::diagnostics(model, bank, ds, ks, true);
    REQUIRE(rep.k_list == ks);
    const alt::Vector agree = alt::knn_label_agreement(bank, ds.labels, ks, true);
    for (std::size_t i = 0; i < ks.size(); ++i) CHECK(rep.agreement[i] == agree[i]);

    const alt::CosineStats stats = alt::class_cosine_stats(bank.f, ds.labels);
    CHECK(rep.cosine.same_class_mean == stats.same_class_mean);
    CHECK(rep.cosine.across_class_mean == stats.across_class_mean);
    if (stats.across_class_mean > 0.0)
        CHECK(rep.similarity_ratio ==
              doctest::Approx(stats.same_class_mean / stats.across_class_mean)
                  .epsilon(1e-12));

    const alt::EvalReport eval = alt::evaluate(model, ds);
    CHECK(rep.eval.accuracy == eval.accuracy);
}
