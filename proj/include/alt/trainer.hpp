#pragma once

// End-to-end runs: dataset pair construction, supervised source training,
// the adaptation loop (threshold update, division, neighbor retrieval, loss
// step, bank write-back), and the file-writing command layer used by the
// CLI. The *_model functions are pure given their config and inputs; the
// cmd_* wrappers add persistence.

#include <filesystem>
#include <string>
#include <vector>

#include "alt/analysis.hpp"
#include "alt/bank.hpp"
#include "alt/config.hpp"
#include "alt/data.hpp"
#include "alt/division.hpp"
#include "alt/model.hpp"

namespace alt {

struct DomainPair {
    Dataset source;
    Dataset target;
};

/// Source and target draws per the dataset config. Two-moons pairs use
/// consecutive derived seeds so the target is an independent rotated draw;
/// the mixture generator produces both sides from one seed.
DomainPair generate_datasets(const AdaptConfig& cfg);

struct PretrainOutcome {
    ModelParams params;
    OptimizerState opt;
    Vector losses; // one entry per iteration
    EvalReport source_eval;
};

/// Label-smoothed cross-entropy training on the source set. Uniform
/// learning-rate scales during this stage; the configured group scales are
/// installed on the returned parameters for the adaptation stage.
PretrainOutcome pretrain_model(const AdaptConfig& cfg, const Dataset& source);

struct MetricsRow {
    std::size_t iter = 0;
    LossReport loss;
    double tau = 0.0;
    std::vector<std::size_t> sigma;
    Vector thresholds;
};

struct AdaptOutcome {
    ModelParams params;
    OptimizerState opt;
    FeatureBank bank;
    LearningState state;
    std::vector<MetricsRow> metrics; // one row per iteration
    EvalReport target_eval;
};

/// The adaptation loop. Per iteration: clean/weak/strong views for the whole
/// batch, smoothed-threshold update from clean confidences, per-class counts
/// over the stale bank, thresholds, batch partition, neighbor retrieval for
/// inner rows, one gradient step, then bank write-back of the pre-step clean
/// embeddings and predictions. Deterministic given cfg and inputs.
AdaptOutcome adapt_model(const AdaptConfig& cfg, const ModelParams& source,
                         const Dataset& target);

/// Full CSV document (header + rows) for the per-iteration metrics. Columns:
/// iter,alr,sep,air,lambda,total,inner_count,outlier_count,tau,
/// sigma_0..sigma_{C-1},T_0..T_{C-1}.
std::string metrics_csv(const std::vector<MetricsRow>& rows,
                        std::size_t num_classes);

/// Writes config.json, source.csv, the source checkpoint (+sidecar),
/// pretrain_metrics.csv, and pretrain_summary.txt into cfg.out_dir.
/// Returns the checkpoint path.
std::filesystem::path cmd_pretrain(const AdaptConfig& cfg);

/// Loads the source checkpoint, adapts, and writes config.json, target.csv,
/// the adapted checkpoint (+sidecar), bank.altc, metrics.csv, and
/// summary.txt into cfg.out_dir. Returns the adapted checkpoint path.
std::filesystem::path cmd_adapt(const AdaptConfig& cfg,
                                const std::filesystem::path& source_ckpt);

/// Rebuilds (or imports, if bank_path is nonempty) the bank for the given
/// checkpoint and writes analysis_summary.txt, agreement.csv, confusion.csv,
/// and pca_scatter.csv into cfg.out_dir.
void cmd_analyze(const AdaptConfig& cfg, const std::filesystem::path& ckpt,
                 const std::filesystem::path& bank_path = {});

/// Preset grid {baseline, alr, air, full} x ablate.num_seeds seeds, one
/// shared pretrain per seed. Writes ablation.csv and ablate_summary.txt.
void cmd_ablate(const AdaptConfig& cfg);

} // namespace alt
