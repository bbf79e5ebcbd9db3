#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "alt/rng.hpp"

TEST_CASE("identical seeds reproduce the exact draw sequence") {
    alt::Rng a(42);
    alt::Rng b(42);
    for (int i = 0; i < 200; ++i) CHECK(a.uniform() == b.uniform());

    alt::Rng c(42);
    alt::Rng d(43);
    bool any_diff = false;
    for (int i = 0; i < 32 && !any_diff; ++i) any_diff = c.uniform() != d.uniform();
    CHECK(any_diff);
}

TEST_CASE("uniform draws respect their ranges") {
    alt::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform(-2.5, 4.0);
        CHECK(v >= -2.5);
        CHECK(v < 4.0);
    }
}

TEST_CASE("gaussian draws have roughly standard moments") {
    alt::Rng rng(123);
    const int n = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);

    // The affine form is mean + sd times the unit stream.
    alt::Rng unit(123);
    alt::Rng affine(123);
    CHECK(affine.gaussian(3.0, 2.0) ==
          doctest::Approx(3.0 + 2.0 * unit.gaussian()).epsilon(1e-15));
}

TEST_CASE("below(n) is bounded and reaches every residue") {
    alt::Rng rng(5);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t x = rng.below(7);
        REQUIRE(x < 7);
        ++seen[static_cast<std::size_t>(x)];
    }
    for (const int count : seen) CHECK(count > 0);
}

TEST_CASE("shuffle permutes without loss and is seed-deterministic") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;

    alt::Rng a(99);
    a.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == w);
    CHECK(v != w); // 50 elements: an identity shuffle would be astonishing

    std::vector<int> v2(50);
    std::iota(v2.begin(), v2.end(), 0);
    alt::Rng b(99);
    b.shuffle(v2);
    CHECK(v == v2);
}

TEST_CASE("split streams diverge from each other and the parent") {
    alt::Rng parent(17);
    alt::Rng s1 = parent.split(1);
    alt::Rng s2 = parent.split(2);

    bool differ = false;
    for (int i = 0; i < 16 && !differ; ++i) differ = s1.uniform() != s2.uniform();
    CHECK(differ);

    alt::Rng parent_again(17);
    alt::Rng t1 = parent_again.split(1);
    alt::Rng s1_again = alt::Rng(17).split(1);
    for (int i = 0; i < 16; ++i) CHECK(t1.uniform() == s1_again.uniform());
}
