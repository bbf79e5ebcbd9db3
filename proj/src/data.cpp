#include "alt/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace alt {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void rotate_about(Matrix& points, double degrees, double cx, double cy) {
    const double a = degrees * kDegToRad;
    const double c = std::cos(a), s = std::sin(a);
    for (std::size_t i = 0; i < points.rows; ++i) {
        const double x = points.at(i, 0) - cx;
        const double y = points.at(i, 1) - cy;
        points.at(i, 0) = cx + c * x - s * y;
        points.at(i, 1) = cy + s * x + c * y;
    }
}

} // namespace

Dataset gen_two_moons(std::size_t n_per_class, double noise_sd,
                      double rotation_degrees, std::uint64_t seed) {
    if (n_per_class == 0)
        throw std::invalid_argument("gen_two_moons: n_per_class must be positive");
    if (noise_sd < 0.0)
        throw std::invalid_argument("gen_two_moons: negative noise_sd");

    Rng rng(seed);
    Dataset ds;
    ds.inputs = Matrix(2 * n_per_class, 2);
    ds.labels.resize(2 * n_per_class);
    ds.domain = "two-moons";
    ds.seed = seed;

    for (std::size_t i = 0; i < n_per_class; ++i) {
        const double t = rng.uniform(0.0, std::numbers::pi);
        ds.inputs.at(i, 0) = std::cos(t) + noise_sd * rng.gaussian();
        ds.inputs.at(i, 1) = std::sin(t) + noise_sd * rng.gaussian();
        ds.labels[i] = 0;
    }
    for (std::size_t i = 0; i < n_per_class; ++i) {
        const std::size_t row = n_per_class + i;
        const double t = rng.uniform(0.0, std::numbers::pi);
        ds.inputs.at(row, 0) = 1.0 - std::cos(t) + noise_sd * rng.gaussian();
        ds.inputs.at(row, 1) = 0.5 - std::sin(t) + noise_sd * rng.gaussian();
        ds.labels[row] = 1;
    }

    if (rotation_degrees != 0.0) {
        double cx = 0.0, cy = 0.0;
        for (std::size_t i = 0; i < ds.inputs.rows; ++i) {
            cx += ds.inputs.at(i, 0);
            cy += ds.inputs.at(i, 1);
        }
        cx /= static_cast<double>(ds.inputs.rows);
        cy /= static_cast<double>(ds.inputs.rows);
        rotate_about(ds.inputs, rotation_degrees, cx, cy);
    }
    return ds;
}

std::pair<Dataset, Dataset> gen_gaussian_mixture(std::size_t num_classes,
                                                 std::size_t n_per_class,
                                                 double class_separation,
                                                 const Vector& target_shift,
                                                 double target_rotation_degrees,
                                                 std::uint64_t seed) {
    if (num_classes < 2)
        throw std::invalid_argument("gen_gaussian_mixture: need at least 2 classes");
    if (n_per_class == 0)
        throw std::invalid_argument("gen_gaussian_mixture: n_per_class must be positive");
    if (!target_shift.empty() && target_shift.size() != 2)
        throw std::invalid_argument("gen_gaussian_mixture: shift must have 2 entries");

    Rng rng(seed);
    const std::size_t n = num_classes * n_per_class;
    const auto draw = [&](Dataset& ds) {
        ds.inputs = Matrix(n, 2);
        ds.labels.resize(n);
        ds.seed = seed;
        std::size_t row = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                                 static_cast<double>(num_classes);
            const double mx = class_separation * std::cos(angle);
            const double my = class_separation * std::sin(angle);
            for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
                ds.inputs.at(row, 0) = mx + rng.gaussian();
                ds.inputs.at(row, 1) = my + rng.gaussian();
                ds.labels[row] = c;
            }
        }
    };

    std::pair<Dataset, Dataset> out;
    draw(out.first);
    out.first.domain = "source";
    draw(out.second);
    out.second.domain = "target";
    if (target_rotation_degrees != 0.0)
        rotate_about(out.second.inputs, target_rotation_degrees, 0.0, 0.0);
    if (!target_shift.empty())
        for (std::size_t i = 0; i < out.second.inputs.rows; ++i) {
            out.second.inputs.at(i, 0) += target_shift[0];
            out.second.inputs.at(i, 1) += target_shift[1];
        }
    return out;
}

void validate_augment_spec(const AugmentSpec& spec) {
    if (spec.weak_sd < 0.0 || spec.strong_sd < 0.0)
        throw std::invalid_argument("augment spec: negative jitter magnitude");
    const bool identity_pair = spec.weak_sd == 0.0 && spec.strong_sd == 0.0;
    if (!identity_pair && spec.weak_sd >= spec.strong_sd)
        throw std::invalid_argument(
            "augment spec: weak magnitude must be below strong magnitude");
    if (spec.mask_fraction < 0.0 || spec.mask_fraction >= 1.0)
        throw std::invalid_argument("augment spec: mask fraction outside [0, 1)");
    if (spec.scale_lo <= 0.0 || spec.scale_hi < spec.scale_lo)
        throw std::invalid_argument("augment spec: bad scale range");
    if (spec.feature_scale <= 0.0)
        throw std::invalid_argument("augment spec: feature scale must be positive");
}

Vector weak_aug(std::span<const double> x, const AugmentSpec& spec, Rng& rng) {
    validate_augment_spec(spec);
    const double sd = spec.weak_sd * spec.feature_scale;
    Vector y(x.begin(), x.end());
    for (double& v : y) v += sd * rng.gaussian();
    return y;
}

Vector strong_aug(std::span<const double> x, const AugmentSpec& spec, Rng& rng) {
    validate_augment_spec(spec);
    const double sd = spec.strong_sd * spec.feature_scale;
    Vector y(x.begin(), x.end());
    for (double& v : y) v += sd * rng.gaussian();

    const std::size_t n_mask = static_cast<std::size_t>(
        std::llround(spec.mask_fraction * static_cast<double>(x.size())));
    if (n_mask > 0) {
        std::vector<std::size_t> order(x.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < n_mask; ++i) y[order[i]] = 0.0;
    }

    const double scale = rng.uniform(spec.scale_lo, spec.scale_hi);
    for (double& v : y) v *= scale;
    return y;
}

double dataset_feature_scale(const Matrix& inputs) {
    if (inputs.rows == 0 || inputs.cols == 0)
        throw std::invalid_argument("dataset_feature_scale: empty matrix");
    double total_var = 0.0;
    for (std::size_t j = 0; j < inputs.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < inputs.rows; ++i) mean += inputs.at(i, j);
        mean /= static_cast<double>(inputs.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < inputs.rows; ++i) {
            const double d = inputs.at(i, j) - mean;
            var += d * d;
        }
        total_var += var / static_cast<double>(inputs.rows);
    }
    return std::sqrt(total_var / static_cast<double>(inputs.cols));
}

ExpansionReport expansion_check(const Matrix& inputs,
                                std::span<const std::size_t> subset, double r,
                                double q, double xi) {
    if (subset.empty())
        throw std::invalid_argument("expansion_check: empty subset");
    if (r <= 0.0)
        throw std::invalid_argument("expansion_check: radius must be positive");
    if (q <= 0.0 || q > 1.0)
        throw std::invalid_argument("expansion_check: q outside (0, 1]");
    if (xi <= 0.0)
        throw std::invalid_argument("expansion_check: xi must be positive");

    const std::size_t n = inputs.rows;
    std::vector<char> in_subset(n, 0);
    for (const std::size_t i : subset) {
        if (i >= n)
            throw std::out_of_range("expansion_check: subset index " +
                                    std::to_string(i) + " out of range");
        in_subset[i] = 1;
    }

    const double reach2 = 4.0 * r * r; // ||x - x'|| <= 2r, compared squared
    std::vector<char> in_neighborhood(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (in_subset[j]) continue;
        for (const std::size_t i : subset) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < inputs.cols; ++c) {
                const double d = inputs.at(i, c) - inputs.at(j, c);
                d2 += d * d;
            }
            if (d2 <= reach2) {
                in_neighborhood[j] = 1;
                break;
            }
        }
    }

    std::size_t subset_count = 0, boundary_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        subset_count += in_subset[i] != 0;
        boundary_count += in_neighborhood[i] != 0;
    }

    ExpansionReport rep;
    rep.subset_mass = static_cast<double>(subset_count) / static_cast<double>(n);
    rep.boundary_mass = static_cast<double>(boundary_count) / static_cast<double>(n);
    rep.required_mass = std::min(xi, rep.subset_mass);
    rep.ratio = rep.boundary_mass / rep.required_mass;
    rep.applicable = rep.subset_mass >= q;
    rep.holds = !rep.applicable || rep.boundary_mass >= rep.required_mass;
    return rep;
}

} // namespace alt
