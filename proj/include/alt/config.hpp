#pragma once

// Run configuration: one JSON document with full defaults, strict key
// checking, preset expansion for the ablation grid, dotted-path overrides
// for the CLI, and a stable content hash for checkpoint sidecars.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alt/data.hpp"
#include "alt/division.hpp"

namespace alt {

struct DatasetConfig {
    std::string generator = "two_moons"; // or "gaussian_mixture"
    std::uint64_t seed = 0;              // 0 derives from the run seed
    std::size_t n_per_class = 150;
    double noise_sd = 0.08;              // two-moons jitter
    std::size_t num_classes = 3;         // gaussian mixture only
    double class_separation = 3.0;       // gaussian mixture only
    double target_rotation_degrees = 30.0;
    Vector target_shift;                 // gaussian mixture only, 2 entries or empty
};

struct ModelConfig {
    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 32;
    std::size_t bottleneck_dim = 16; // 0 disables
};

struct OptimizerConfig {
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.005;
    // The head trains 10x slower than the backbone, per the update-scale
    // convention this engine ships with; the magnitudes are conservative
    // because the adaptation losses are batch sums.
    double backbone_lr_scale = 0.05;
    double head_lr_scale = 0.005;
};

struct PretrainConfig {
    std::size_t epochs = 300;
    std::size_t batch_size = 64;
    double lr = 0.05;
    double label_smoothing = 0.1;
};

struct AdaptSettings {
    std::size_t k = 3;
    double alpha = 0.9;       // confidence smoothing momentum
    double beta_sched = 2.0;  // trade-off schedule exponent
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::size_t max_iter = 0; // 0 derives epochs * batches_per_epoch
    bool use_division = true;
    std::string neighbor_weights = "cosine"; // or "ones"
    DivisionMode division_mode = DivisionMode::literal;
    bool hard_air = true;
    bool dispersion_sep = true;
    // mean keeps the threshold at the typical confidence, so the division
    // engages only when per-class confidence grows imbalanced; max saturates
    // the threshold quickly and engages it aggressively.
    TauAggregate tau_aggregate = TauAggregate::mean;
    std::size_t bank_refresh_epochs = 0; // 0 = per-batch updates only
};

struct AugmentConfig {
    double weak_sd = 0.05;
    double strong_sd = 0.15;
    double mask_fraction = 0.1;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
};

struct AnalysisConfig {
    std::vector<std::size_t> k_list = {1, 2, 3, 4, 5};
    bool all_agree = true;            // false: per-neighbor fraction
    std::string reference = "labels"; // or "source_pred"
    std::size_t samples_per_point = 16;
    double xi = 2.0;                  // error-bound constant
    double expansion_radius = 0.25;   // times the dataset feature scale
    double expansion_q = 0.5;
};

struct AblateConfig {
    std::size_t num_seeds = 5;
};

struct AdaptConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/alt";
    DatasetConfig dataset;
    ModelConfig model;
    OptimizerConfig optimizer;
    PretrainConfig pretrain;
    AdaptSettings adapt;
    AugmentConfig augment;
    AnalysisConfig analysis;
    AblateConfig ablate;
};

nlohmann::json config_to_json(const AdaptConfig& cfg);

/// Missing fields take their defaults; unknown keys and malformed values are
/// errors. The result is validated.
AdaptConfig config_from_json(const nlohmann::json& j);

AdaptConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const AdaptConfig& cfg);

/// Throws std::invalid_argument describing the first bad field.
void validate_config(const AdaptConfig& cfg);

/// FNV-1a over the canonical (sorted-key, compact) JSON serialization,
/// rendered as "fnv1a:" + 16 hex digits.
std::string config_hash(const AdaptConfig& cfg);

/// Ablation presets toggle the division machinery and the neighbor weights:
///   baseline: division off, weights all-ones
///   alr:      division off, cosine weights
///   air:      division on,  weights all-ones
///   full:     division on,  cosine weights
void apply_preset(AdaptConfig& cfg, const std::string& preset);

/// Sets "adapt.k=5"-style dotted-path overrides on a config document. The
/// value is parsed as JSON when possible, else taken as a string. The path
/// must already exist (no new keys).
void apply_override(nlohmann::json& doc, const std::string& dotted_key,
                    const std::string& value);

/// 2 for two-moons, the configured count for the mixture.
std::size_t dataset_num_classes(const DatasetConfig& cfg);

/// dataset.seed when nonzero, otherwise a fixed mix of the run seed.
std::uint64_t effective_dataset_seed(const AdaptConfig& cfg);

std::size_t dataset_input_dim(const DatasetConfig& cfg);

} // namespace alt
