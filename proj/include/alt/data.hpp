#pragma once

// Synthetic domain pairs, the weak/strong view operators for vector inputs,
// and a brute-force neighborhood-expansion checker over finite point sets.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alt/numerics.hpp"
#include "alt/rng.hpp"

namespace alt {

// Labels ride along for source training and for evaluation; the adaptation
// losses take bare matrices and therefore cannot read them.
struct Dataset {
    Matrix inputs;                   // N x input_dim
    std::vector<std::size_t> labels; // class indices in [0, C)
    std::string domain;
    std::uint64_t seed = 0;
};

/// Two interleaved half-circle classes with Gaussian jitter, rotated by the
/// given angle about the data centroid. Same seed and n produce the same
/// underlying draw, so rotation = 0 yields the un-rotated twin of any
/// rotated dataset.
Dataset gen_two_moons(std::size_t n_per_class, double noise_sd,
                      double rotation_degrees, std::uint64_t seed);

/// C unit-variance Gaussian blobs with means spaced on a circle of radius
/// class_separation. The target is an independent draw from the source
/// distribution pushed through rotation (degrees, about the origin) plus
/// shift. shift must have 2 entries or be empty (no shift).
std::pair<Dataset, Dataset> gen_gaussian_mixture(std::size_t num_classes,
                                                 std::size_t n_per_class,
                                                 double class_separation,
                                                 const Vector& target_shift,
                                                 double target_rotation_degrees,
                                                 std::uint64_t seed);

// View magnitudes are relative: effective jitter sd = sd * feature_scale,
// with feature_scale normally set to the dataset's feature deviation so the
// same config works across generators.
struct AugmentSpec {
    double weak_sd = 0.05;
    double strong_sd = 0.15;
    double mask_fraction = 0.1; // fraction of coordinates zeroed, in [0, 1)
    double scale_lo = 0.9;      // global multiplier range for the strong view
    double scale_hi = 1.1;
    double feature_scale = 1.0;
};

/// Throws unless weak_sd < strong_sd (or both are zero, the identity pair),
/// mask_fraction is in [0, 1), and the scale range is ordered and positive.
void validate_augment_spec(const AugmentSpec& spec);

/// x plus isotropic Gaussian jitter of sd weak_sd * feature_scale.
Vector weak_aug(std::span<const double> x, const AugmentSpec& spec, Rng& rng);

/// Jitter of sd strong_sd * feature_scale, then exactly
/// round(mask_fraction * dim) coordinates zeroed, then a global scale drawn
/// from [scale_lo, scale_hi).
Vector strong_aug(std::span<const double> x, const AugmentSpec& spec, Rng& rng);

/// Root-mean of per-column variances: the scalar feature deviation that
/// AugmentSpec magnitudes are relative to.
double dataset_feature_scale(const Matrix& inputs);

// Expansion audit of a subset S under the neighborhood
//   N(x) = { x' : ||x - x'|| <= 2r }
// over a finite point set with uniform mass 1/N per point.
struct ExpansionReport {
    double subset_mass = 0.0;   // P[S]
    double boundary_mass = 0.0; // P[N(S) \ S]
    double required_mass = 0.0; // min(xi, P[S])
    double ratio = 0.0;         // boundary_mass / required_mass
    bool applicable = false;    // P[S] >= q, so the definition constrains S
    bool holds = false;         // vacuously true when not applicable
};

/// Exhaustive check of the expansion inequality
///   P[N(S) \ S] >= min(xi, P[S])   whenever P[S] >= q.
/// Requires a non-empty subset, r > 0, q in (0, 1], xi > 0.
ExpansionReport expansion_check(const Matrix& inputs,
                                std::span<const std::size_t> subset, double r,
                                double q, double xi);

} // namespace alt
