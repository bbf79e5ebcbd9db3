#include "alt/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "alt/io.hpp"
#include "alt/objectives.hpp"
#include "alt/rng.hpp"

namespace alt {
namespace {

namespace fs = std::filesystem;

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols);
    for (std::size_t s = 0; s < idx.size(); ++s) {
        const auto src = m.row(idx[s]);
        std::copy(src.begin(), src.end(), out.row(s).begin());
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

AugmentSpec augment_spec_for(const AdaptConfig& cfg, const Matrix& inputs) {
    AugmentSpec spec;
    spec.weak_sd = cfg.augment.weak_sd;
    spec.strong_sd = cfg.augment.strong_sd;
    spec.mask_fraction = cfg.augment.mask_fraction;
    spec.scale_lo = cfg.augment.scale_lo;
    spec.scale_hi = cfg.augment.scale_hi;
    spec.feature_scale = dataset_feature_scale(inputs);
    validate_augment_spec(spec);
    return spec;
}

double mean_of(std::span<const double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

} // namespace

DomainPair generate_datasets(const AdaptConfig& cfg) {
    const std::uint64_t ds_seed = effective_dataset_seed(cfg);
    const DatasetConfig& d = cfg.dataset;
    DomainPair pair;
    if (d.generator == "two_moons") {
        pair.source = gen_two_moons(d.n_per_class, d.noise_sd, 0.0, ds_seed);
        pair.target = gen_two_moons(d.n_per_class, d.noise_sd,
                                    d.target_rotation_degrees, ds_seed + 1);
        pair.source.domain = "source";
        pair.target.domain = "target";
    } else if (d.generator == "gaussian_mixture") {
        auto [src, tgt] =
            gen_gaussian_mixture(d.num_classes, d.n_per_class, d.class_separation,
                                 d.target_shift, d.target_rotation_degrees, ds_seed);
        pair.source = std::move(src);
        pair.target = std::move(tgt);
    } else {
        throw std::invalid_argument("generate_datasets: unknown generator '" +
                                    d.generator + "'");
    }
    return pair;
}

PretrainOutcome pretrain_model(const AdaptConfig& cfg, const Dataset& source) {
    const std::size_t n = source.inputs.rows;
    if (n == 0) throw std::invalid_argument("pretrain: empty source dataset");
    if (source.labels.size() != n)
        throw std::invalid_argument("pretrain: labels do not cover the dataset");
    const std::size_t num_classes = dataset_num_classes(cfg.dataset);

    Rng rng(cfg.seed);
    PretrainOutcome out;
    out.params = make_model(source.inputs.cols, cfg.model.hidden_dim,
                            cfg.model.feature_dim, cfg.model.bottleneck_dim,
                            num_classes, rng);
    // Supervised training updates every group at full rate; the configured
    // group scales only apply to the adaptation stage.
    out.params.backbone_lr_scale = 1.0;
    out.params.head_lr_scale = 1.0;

    const std::size_t batch = std::min(cfg.pretrain.batch_size, n);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    const std::size_t total_iters = cfg.pretrain.epochs * per_epoch;
    out.opt = make_optimizer(out.params, std::max<std::size_t>(total_iters, 1),
                             cfg.pretrain.lr, cfg.optimizer.momentum,
                             cfg.optimizer.weight_decay);
    out.losses.reserve(total_iters);

    std::vector<std::size_t> order = identity_order(n);
    std::vector<std::size_t> labels;
    std::size_t iter = 0;
    for (std::size_t epoch = 0; epoch < cfg.pretrain.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            const std::span<const std::size_t> idx(order.data() + start,
                                                   stop - start);
            const Matrix inputs = gather_rows(source.inputs, idx);
            labels.resize(idx.size());
            for (std::size_t s = 0; s < idx.size(); ++s)
                labels[s] = source.labels[idx[s]];
            ModelGrads grads = zero_grads(out.params);
            const double loss =
                supervised_loss_gradients(out.params, inputs, labels,
                                          cfg.pretrain.label_smoothing, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("pretrain: non-finite loss at iteration " +
                                         std::to_string(iter));
            sgd_update(out.params, grads, out.opt);
            out.losses.push_back(loss);
            ++iter;
        }
    }

    out.params.backbone_lr_scale = cfg.optimizer.backbone_lr_scale;
    out.params.head_lr_scale = cfg.optimizer.head_lr_scale;
    out.source_eval = evaluate(out.params, source);
    return out;
}

AdaptOutcome adapt_model(const AdaptConfig& cfg, const ModelParams& source,
                         const Dataset& target) {
    const std::size_t n = target.inputs.rows;
    if (n == 0) throw std::invalid_argument("adapt: empty target dataset");
    if (target.inputs.cols != source.input_dim)
        throw std::invalid_argument(
            "adapt: model expects input dim " + std::to_string(source.input_dim) +
            ", dataset has " + std::to_string(target.inputs.cols));
    const std::size_t num_classes = source.num_classes;
    if (cfg.adapt.k + 1 > n)
        throw std::invalid_argument(
            "adapt: k = " + std::to_string(cfg.adapt.k) +
            " needs at least k + 1 target samples, have " + std::to_string(n));

    AdaptOutcome out;
    out.params = source;
    out.params.backbone_lr_scale = cfg.optimizer.backbone_lr_scale;
    out.params.head_lr_scale = cfg.optimizer.head_lr_scale;

    const std::size_t batch = std::min(cfg.adapt.batch_size, n);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    const std::size_t max_iter =
        cfg.adapt.max_iter != 0 ? cfg.adapt.max_iter : cfg.adapt.epochs * per_epoch;
    out.opt = make_optimizer(out.params, std::max<std::size_t>(max_iter, 1),
                             cfg.optimizer.lr, cfg.optimizer.momentum,
                             cfg.optimizer.weight_decay);
    out.bank = init_bank(out.params, target.inputs);
    out.state = make_learning_state(num_classes, cfg.adapt.alpha);
    out.metrics.reserve(max_iter);

    const AugmentSpec aug = augment_spec_for(cfg, target.inputs);
    const bool cosine_weights = cfg.adapt.neighbor_weights == "cosine";
    Rng rng(cfg.seed);
    std::vector<std::size_t> order = identity_order(n);

    std::size_t iter = 0;
    for (std::size_t epoch = 0; iter < max_iter; ++epoch) {
        if (cfg.adapt.bank_refresh_epochs > 0 && epoch > 0 &&
            epoch % cfg.adapt.bank_refresh_epochs == 0)
            out.bank = init_bank(out.params, target.inputs);
        rng.shuffle(order);
        for (std::size_t start = 0; start < n && iter < max_iter; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            const std::span<const std::size_t> idx(order.data() + start,
                                                   stop - start);
            const std::size_t b = idx.size();
            try {
                AdaptBatch ab;
                ab.clean = gather_rows(target.inputs, idx);
                Matrix weak(b, ab.clean.cols);
                ab.strong = Matrix(b, ab.clean.cols);
                for (std::size_t s = 0; s < b; ++s) {
                    const Vector w = weak_aug(ab.clean.row(s), aug, rng);
                    const Vector st = strong_aug(ab.clean.row(s), aug, rng);
                    std::copy(w.begin(), w.end(), weak.row(s).begin());
                    std::copy(st.begin(), st.end(), ab.strong.row(s).begin());
                }

                Matrix z_clean;
                Matrix p_clean;
                forward_batch(out.params, ab.clean, &z_clean, &p_clean);
                forward_batch(out.params, weak, nullptr, &ab.pseudo);

                Vector confidences(b);
                for (std::size_t s = 0; s < b; ++s) {
                    const auto row = p_clean.row(s);
                    confidences[s] = row[argmax(row)];
                }
                update_tau(out.state, confidences, cfg.adapt.tau_aggregate);
                out.state.sigma = class_learning_effect(out.bank.p, out.state.tau);
                out.state.thresholds = division_thresholds(out.state.sigma);

                ab.outlier.assign(b, 0);
                if (cfg.adapt.use_division) {
                    const BatchPartition part =
                        partition(p_clean, out.state.thresholds,
                                  cfg.adapt.division_mode);
                    for (std::size_t pos : part.outlier) ab.outlier[pos] = 1;
                }

                ab.neighbors.resize(b);
                for (std::size_t s = 0; s < b; ++s) {
                    if (ab.outlier[s]) continue;
                    const KnnResult knn = knn_query(out.bank, idx[s], cfg.adapt.k);
                    BankNeighbors nb;
                    nb.preds = Matrix(cfg.adapt.k, num_classes);
                    for (std::size_t j = 0; j < cfg.adapt.k; ++j) {
                        const auto src_row = out.bank.p.row(knn.indices[j]);
                        std::copy(src_row.begin(), src_row.end(),
                                  nb.preds.row(j).begin());
                    }
                    nb.weights = cosine_weights ? knn.similarities
                                                : Vector(cfg.adapt.k, 1.0);
                    ab.neighbors[s] = std::move(nb);
                }

                ab.lambda = lambda_schedule(iter, max_iter, cfg.adapt.beta_sched);
                ab.k = cfg.adapt.k;
                ab.hard_air = cfg.adapt.hard_air;
                ab.dispersion_sep = cfg.adapt.dispersion_sep;

                auto [report, grads] = adapt_loss_gradients(out.params, ab);
                sgd_update(out.params, grads, out.opt);
                // The bank stores the pre-step clean embeddings so neighbor
                // retrieval always sees values the loss was computed against.
                update_bank(out.bank, idx, z_clean, p_clean);

                out.metrics.push_back({iter, report, out.state.tau,
                                       out.state.sigma, out.state.thresholds});
            } catch (const std::exception& e) {
                throw std::runtime_error("adapt: iteration " +
                                         std::to_string(iter) + ": " + e.what());
            }
            ++iter;
        }
    }

    out.target_eval = evaluate(out.params, target);
    return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows,
                        std::size_t num_classes) {
    std::ostringstream os;
    os << "iter,alr,sep,air,lambda,total,inner_count,outlier_count,tau";
    for (std::size_t c = 0; c < num_classes; ++c) os << ",sigma_" << c;
    for (std::size_t c = 0; c < num_classes; ++c) os << ",T_" << c;
    os << '\n';
    for (const MetricsRow& row : rows) {
        if (row.sigma.size() != num_classes || row.thresholds.size() != num_classes)
            throw std::invalid_argument("metrics_csv: row class count mismatch");
        os << row.iter << ',' << format_double(row.loss.alr) << ','
           << format_double(row.loss.sep) << ',' << format_double(row.loss.air)
           << ',' << format_double(row.loss.lambda) << ','
           << format_double(row.loss.total) << ',' << row.loss.inner_count << ','
           << row.loss.outlier_count << ',' << format_double(row.tau);
        for (std::size_t c = 0; c < num_classes; ++c) os << ',' << row.sigma[c];
        for (std::size_t c = 0; c < num_classes; ++c)
            os << ',' << format_double(row.thresholds[c]);
        os << '\n';
    }
    return os.str();
}

std::filesystem::path cmd_pretrain(const AdaptConfig& cfg) {
    validate_config(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    save_config(out_dir / "config.json", cfg);

    const DomainPair data = generate_datasets(cfg);
    write_dataset_csv(out_dir / "source.csv", data.source);
    const PretrainOutcome res = pretrain_model(cfg, data.source);

    CheckpointMeta meta;
    meta.seed = cfg.seed;
    meta.config_hash = config_hash(cfg);
    meta.iteration = res.losses.size();
    meta.config_json = config_to_json(cfg).dump();
    const fs::path ckpt = out_dir / "source.ckpt";
    save_checkpoint(ckpt, res.params, res.opt, meta);

    std::ostringstream csv;
    csv << "iter,loss\n";
    for (std::size_t i = 0; i < res.losses.size(); ++i)
        csv << i << ',' << format_double(res.losses[i]) << '\n';
    write_text_file(out_dir / "pretrain_metrics.csv", csv.str());

    std::ostringstream sum;
    sum << "command=pretrain\n"
        << "config_hash=" << meta.config_hash << '\n'
        << "seed=" << cfg.seed << '\n'
        << "iterations=" << res.losses.size() << '\n'
        << "final_loss="
        << format_double(res.losses.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : res.losses.back())
        << '\n'
        << "source_accuracy=" << format_double(res.source_eval.accuracy) << '\n';
    write_text_file(out_dir / "pretrain_summary.txt", sum.str());
    return ckpt;
}

std::filesystem::path cmd_adapt(const AdaptConfig& cfg,
                                const std::filesystem::path& source_ckpt) {
    validate_config(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    save_config(out_dir / "config.json", cfg);

    const Checkpoint src = load_checkpoint(source_ckpt);
    const DomainPair data = generate_datasets(cfg);
    if (src.params.num_classes != dataset_num_classes(cfg.dataset))
        throw std::invalid_argument(
            "adapt: checkpoint has " + std::to_string(src.params.num_classes) +
            " classes, dataset has " +
            std::to_string(dataset_num_classes(cfg.dataset)));
    write_dataset_csv(out_dir / "target.csv", data.target);

    const EvalReport before = evaluate(src.params, data.target);
    const AdaptOutcome res = adapt_model(cfg, src.params, data.target);

    write_text_file(out_dir / "metrics.csv",
                    metrics_csv(res.metrics, src.params.num_classes));
    export_bank(out_dir / "bank.altc", res.bank);

    CheckpointMeta meta;
    meta.seed = cfg.seed;
    meta.config_hash = config_hash(cfg);
    meta.iteration = res.metrics.size();
    meta.config_json = config_to_json(cfg).dump();
    const fs::path ckpt = out_dir / "adapted.ckpt";
    save_checkpoint(ckpt, res.params, res.opt, meta);

    std::ostringstream sum;
    sum << "command=adapt\n"
        << "config_hash=" << meta.config_hash << '\n'
        << "seed=" << cfg.seed << '\n'
        << "iterations=" << res.metrics.size() << '\n'
        << "source_only_target_accuracy=" << format_double(before.accuracy) << '\n'
        << "adapted_target_accuracy=" << format_double(res.target_eval.accuracy)
        << '\n'
        << "final_total="
        << format_double(res.metrics.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : res.metrics.back().loss.total)
        << '\n'
        << "final_tau=" << format_double(res.state.tau) << '\n';
    write_text_file(out_dir / "summary.txt", sum.str());
    return ckpt;
}

void cmd_analyze(const AdaptConfig& cfg, const std::filesystem::path& ckpt,
                 const std::filesystem::path& bank_path) {
    validate_config(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);

    const Checkpoint ck = load_checkpoint(ckpt);
    const DomainPair data = generate_datasets(cfg);
    const Dataset& target = data.target;
    if (ck.params.input_dim != target.inputs.cols)
        throw std::invalid_argument(
            "analyze: checkpoint expects input dim " +
            std::to_string(ck.params.input_dim) + ", dataset has " +
            std::to_string(target.inputs.cols));

    FeatureBank bank = bank_path.empty() ? init_bank(ck.params, target.inputs)
                                         : import_bank(bank_path);
    if (bank.size() != target.inputs.rows)
        throw std::invalid_argument(
            "analyze: bank holds " + std::to_string(bank.size()) +
            " rows, dataset has " + std::to_string(target.inputs.rows));
    if (bank.f.cols != ck.params.embedding_dim())
        throw std::invalid_argument(
            "analyze: bank embedding dim " + std::to_string(bank.f.cols) +
            " does not match the model's " +
            std::to_string(ck.params.embedding_dim()));

    // Reference labels for the geometry statistics: ground truth by default,
    // or the analyzed model's own predictions to mirror the pre-adaptation
    // setting. Accuracy is always measured against ground truth.
    std::vector<std::size_t> ref;
    ref.reserve(bank.size());
    if (cfg.analysis.reference == "source_pred") {
        for (std::size_t i = 0; i < bank.size(); ++i)
            ref.push_back(argmax(bank.p.row(i)));
    } else {
        ref = target.labels;
    }

    const Vector agreement =
        knn_label_agreement(bank, ref, cfg.analysis.k_list, cfg.analysis.all_agree);
    CosineStats cosine;
    bool cosine_ok = true;
    try {
        cosine = class_cosine_stats(bank.f, ref);
    } catch (const std::exception&) {
        cosine_ok = false; // e.g. a single predicted class leaves no pairs
    }

    const EvalReport eval = evaluate(ck.params, target);

    const AugmentSpec aug = augment_spec_for(cfg, target.inputs);
    Rng rng(cfg.seed);
    const double mu = consistency_regularizer_estimate(
        ck.params, target.inputs, aug, cfg.analysis.samples_per_point, rng);
    const BoundReport bound =
        verify_error_bound(1.0 - eval.accuracy, mu, cfg.analysis.xi);

    // Expansion audit of the correctly-predicted set under a radius relative
    // to the dataset's feature scale.
    Matrix probs;
    forward_batch(ck.params, target.inputs, nullptr, &probs);
    std::vector<std::size_t> correct;
    for (std::size_t i = 0; i < probs.rows; ++i)
        if (argmax(probs.row(i)) == target.labels[i]) correct.push_back(i);
    const double radius =
        cfg.analysis.expansion_radius * dataset_feature_scale(target.inputs);
    ExpansionReport expansion;
    const bool expansion_ok = !correct.empty();
    if (expansion_ok)
        expansion = expansion_check(target.inputs, correct, radius,
                                    cfg.analysis.expansion_q, cfg.analysis.xi);

    const Pca2D pca = pca_project_2d(bank.f);

    std::ostringstream agree_csv;
    agree_csv << "k,agreement\n";
    for (std::size_t i = 0; i < cfg.analysis.k_list.size(); ++i)
        agree_csv << cfg.analysis.k_list[i] << ','
                  << format_double(agreement[i]) << '\n';
    write_text_file(out_dir / "agreement.csv", agree_csv.str());

    std::ostringstream conf_csv;
    conf_csv << "label";
    for (std::size_t c = 0; c < eval.confusion.cols; ++c) conf_csv << ",pred_" << c;
    conf_csv << '\n';
    for (std::size_t r = 0; r < eval.confusion.rows; ++r) {
        conf_csv << r;
        for (std::size_t c = 0; c < eval.confusion.cols; ++c)
            conf_csv << ',' << format_double(eval.confusion.at(r, c));
        conf_csv << '\n';
    }
    write_text_file(out_dir / "confusion.csv", conf_csv.str());

    std::ostringstream pca_csv;
    pca_csv << "pc1,pc2,label,pred\n";
    for (std::size_t i = 0; i < pca.points.rows; ++i)
        pca_csv << format_double(pca.points.at(i, 0)) << ','
                << format_double(pca.points.at(i, 1)) << ',' << target.labels[i]
                << ',' << argmax(bank.p.row(i)) << '\n';
    write_text_file(out_dir / "pca_scatter.csv", pca_csv.str());

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream sum;
    sum << "command=analyze\n"
        << "config_hash=" << config_hash(cfg) << '\n'
        << "checkpoint=" << ckpt.string() << '\n'
        << "reference=" << cfg.analysis.reference << '\n'
        << "target_accuracy=" << format_double(eval.accuracy) << '\n';
    for (std::size_t i = 0; i < cfg.analysis.k_list.size(); ++i)
        sum << "agreement_k" << cfg.analysis.k_list[i] << '='
            << format_double(agreement[i]) << '\n';
    sum << "same_class_mean="
        << format_double(cosine_ok ? cosine.same_class_mean : nan) << '\n'
        << "across_class_mean="
        << format_double(cosine_ok ? cosine.across_class_mean : nan) << '\n'
        << "similarity_ratio="
        << format_double(cosine_ok && cosine.across_class_mean > 0.0
                             ? cosine.same_class_mean / cosine.across_class_mean
                             : nan)
        << '\n'
        << "regularizer_estimate=" << format_double(mu) << '\n'
        << "error_bound=" << format_double(bound.error_bound) << '\n'
        << "measured_error=" << format_double(bound.measured_error) << '\n'
        << "bound_holds=" << (bound.holds ? "true" : "false") << '\n'
        << "expansion_subset=correct_predictions\n"
        << "expansion_subset_size=" << correct.size() << '\n';
    if (expansion_ok) {
        sum << "expansion_subset_mass=" << format_double(expansion.subset_mass)
            << '\n'
            << "expansion_boundary_mass="
            << format_double(expansion.boundary_mass) << '\n'
            << "expansion_required_mass="
            << format_double(expansion.required_mass) << '\n'
            << "expansion_applicable="
            << (expansion.applicable ? "true" : "false") << '\n'
            << "expansion_holds=" << (expansion.holds ? "true" : "false") << '\n';
    } else {
        sum << "expansion_holds=skipped no correct predictions\n";
    }
    write_text_file(out_dir / "analysis_summary.txt", sum.str());
}

void cmd_ablate(const AdaptConfig& cfg) {
    validate_config(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);

    static constexpr std::array<const char*, 4> kPresets = {"baseline", "alr",
                                                            "air", "full"};
    const std::size_t seeds = cfg.ablate.num_seeds;
    if (seeds == 0) throw std::invalid_argument("ablate: num_seeds must be >= 1");

    struct SeedRun {
        DomainPair data;
        ModelParams source;
        double source_only = 0.0;
    };
    // Presets only alter the adaptation settings, so one pretrain per seed
    // serves every cell of the grid.
    std::vector<SeedRun> runs;
    runs.reserve(seeds);
    for (std::size_t s = 0; s < seeds; ++s) {
        AdaptConfig base = cfg;
        base.seed = cfg.seed + s;
        SeedRun run;
        run.data = generate_datasets(base);
        run.source = pretrain_model(base, run.data.source).params;
        run.source_only = evaluate(run.source, run.data.target).accuracy;
        runs.push_back(std::move(run));
    }

    Vector all_ratios;
    Vector all_accs;
    std::ostringstream csv;
    csv << "preset,mean_accuracy,sd_accuracy,num_seeds";
    for (std::size_t s = 0; s < seeds; ++s) csv << ",acc_" << s;
    csv << '\n';

    std::ostringstream sum;
    sum << "command=ablate\n"
        << "config_hash=" << config_hash(cfg) << '\n'
        << "seed=" << cfg.seed << '\n'
        << "num_seeds=" << seeds << '\n';
    {
        Vector src_accs;
        for (const SeedRun& run : runs) src_accs.push_back(run.source_only);
        sum << "source_only_mean_accuracy=" << format_double(mean_of(src_accs))
            << " sd=" << format_double(sample_sd(src_accs)) << '\n';
    }

    for (const char* preset : kPresets) {
        Vector accs;
        for (std::size_t s = 0; s < seeds; ++s) {
            AdaptConfig run_cfg = cfg;
            run_cfg.seed = cfg.seed + s;
            apply_preset(run_cfg, preset);
            const AdaptOutcome res =
                adapt_model(run_cfg, runs[s].source, runs[s].data.target);
            accs.push_back(res.target_eval.accuracy);
            try {
                const CosineStats stats =
                    class_cosine_stats(res.bank.f, runs[s].data.target.labels);
                if (stats.across_class_mean > 0.0) {
                    all_ratios.push_back(stats.same_class_mean /
                                         stats.across_class_mean);
                    all_accs.push_back(res.target_eval.accuracy);
                }
            } catch (const std::exception&) {
                // Degenerate geometry: drop the pair from the correlation.
            }
        }
        csv << preset << ',' << format_double(mean_of(accs)) << ','
            << format_double(sample_sd(accs)) << ',' << seeds;
        for (double a : accs) csv << ',' << format_double(a);
        csv << '\n';
        sum << "preset=" << preset << " mean_accuracy="
            << format_double(mean_of(accs)) << " sd="
            << format_double(sample_sd(accs)) << '\n';
    }

    double rho = std::numeric_limits<double>::quiet_NaN();
    if (all_ratios.size() >= 2) {
        try {
            rho = spearman_rank_corr(all_ratios, all_accs);
        } catch (const std::exception&) {
            // Constant sequence: correlation undefined, stays nan.
        }
    }
    sum << "spearman_ratio_accuracy=" << format_double(rho) << '\n';

    write_text_file(out_dir / "ablation.csv", csv.str());
    write_text_file(out_dir / "ablate_summary.txt", sum.str());
}

} // namespace alt
