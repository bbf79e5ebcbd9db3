#include "alt/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace alt {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.contains(key))
            throw std::invalid_argument("config: unknown key '" + where + "." + key +
                                        "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

std::string mode_name(DivisionMode m) {
    return m == DivisionMode::literal ? "literal" : "prose";
}

DivisionMode mode_from(const std::string& s) {
    if (s == "literal") return DivisionMode::literal;
    if (s == "prose") return DivisionMode::prose;
    throw std::invalid_argument("config: division_mode must be literal or prose");
}

std::string agg_name(TauAggregate a) {
    return a == TauAggregate::max ? "max" : "mean";
}

TauAggregate agg_from(const std::string& s) {
    if (s == "max") return TauAggregate::max;
    if (s == "mean") return TauAggregate::mean;
    throw std::invalid_argument("config: tau_aggregate must be max or mean");
}

} // namespace

nlohmann::json config_to_json(const AdaptConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["dataset"] = {{"generator", cfg.dataset.generator},
                    {"seed", cfg.dataset.seed},
                    {"n_per_class", cfg.dataset.n_per_class},
                    {"noise_sd", cfg.dataset.noise_sd},
                    {"num_classes", cfg.dataset.num_classes},
                    {"class_separation", cfg.dataset.class_separation},
                    {"target_rotation_degrees", cfg.dataset.target_rotation_degrees},
                    {"target_shift", cfg.dataset.target_shift}};
    j["model"] = {{"hidden_dim", cfg.model.hidden_dim},
                  {"feature_dim", cfg.model.feature_dim},
                  {"bottleneck_dim", cfg.model.bottleneck_dim}};
    j["optimizer"] = {{"lr", cfg.optimizer.lr},
                      {"momentum", cfg.optimizer.momentum},
                      {"weight_decay", cfg.optimizer.weight_decay},
                      {"backbone_lr_scale", cfg.optimizer.backbone_lr_scale},
                      {"head_lr_scale", cfg.optimizer.head_lr_scale}};
    j["pretrain"] = {{"epochs", cfg.pretrain.epochs},
                     {"batch_size", cfg.pretrain.batch_size},
                     {"lr", cfg.pretrain.lr},
                     {"label_smoothing", cfg.pretrain.label_smoothing}};
    j["adapt"] = {{"k", cfg.adapt.k},
                  {"alpha", cfg.adapt.alpha},
                  {"beta_sched", cfg.adapt.beta_sched},
                  {"batch_size", cfg.adapt.batch_size},
                  {"epochs", cfg.adapt.epochs},
                  {"max_iter", cfg.adapt.max_iter},
                  {"use_division", cfg.adapt.use_division},
                  {"neighbor_weights", cfg.adapt.neighbor_weights},
                  {"division_mode", mode_name(cfg.adapt.division_mode)},
                  {"hard_air", cfg.adapt.hard_air},
                  {"dispersion_sep", cfg.adapt.dispersion_sep},
                  {"tau_aggregate", agg_name(cfg.adapt.tau_aggregate)},
                  {"bank_refresh_epochs", cfg.adapt.bank_refresh_epochs}};
    j["augment"] = {{"weak_sd", cfg.augment.weak_sd},
                    {"strong_sd", cfg.augment.strong_sd},
                    {"mask_fraction", cfg.augment.mask_fraction},
                    {"scale_lo", cfg.augment.scale_lo},
                    {"scale_hi", cfg.augment.scale_hi}};
    j["analysis"] = {{"k_list", cfg.analysis.k_list},
                     {"all_agree", cfg.analysis.all_agree},
                     {"reference", cfg.analysis.reference},
                     {"samples_per_point", cfg.analysis.samples_per_point},
                     {"xi", cfg.analysis.xi},
                     {"expansion_radius", cfg.analysis.expansion_radius},
                     {"expansion_q", cfg.analysis.expansion_q}};
    j["ablate"] = {{"num_seeds", cfg.ablate.num_seeds}};
    return j;
}

AdaptConfig config_from_json(const nlohmann::json& j) {
    check_keys(j, "config",
               {"seed", "out_dir", "dataset", "model", "optimizer", "pretrain",
                "adapt", "augment", "analysis", "ablate"});
    AdaptConfig cfg;
    read_field(j, "seed", cfg.seed);
    read_field(j, "out_dir", cfg.out_dir);

    if (const auto it = j.find("dataset"); it != j.end()) {
        check_keys(*it, "dataset",
                   {"generator", "seed", "n_per_class", "noise_sd", "num_classes",
                    "class_separation", "target_rotation_degrees", "target_shift"});
        read_field(*it, "generator", cfg.dataset.generator);
        read_field(*it, "seed", cfg.dataset.seed);
        read_field(*it, "n_per_class", cfg.dataset.n_per_class);
        read_field(*it, "noise_sd", cfg.dataset.noise_sd);
        read_field(*it, "num_classes", cfg.dataset.num_classes);
        read_field(*it, "class_separation", cfg.dataset.class_separation);
        read_field(*it, "target_rotation_degrees",
                   cfg.dataset.target_rotation_degrees);
        read_field(*it, "target_shift", cfg.dataset.target_shift);
    }
    if (const auto it = j.find("model"); it != j.end()) {
        check_keys(*it, "model", {"hidden_dim", "feature_dim", "bottleneck_dim"});
        read_field(*it, "hidden_dim", cfg.model.hidden_dim);
        read_field(*it, "feature_dim", cfg.model.feature_dim);
        read_field(*it, "bottleneck_dim", cfg.model.bottleneck_dim);
    }
    if (const auto it = j.find("optimizer"); it != j.end()) {
        check_keys(*it, "optimizer",
                   {"lr", "momentum", "weight_decay", "backbone_lr_scale",
                    "head_lr_scale"});
        read_field(*it, "lr", cfg.optimizer.lr);
        read_field(*it, "momentum", cfg.optimizer.momentum);
        read_field(*it, "weight_decay", cfg.optimizer.weight_decay);
        read_field(*it, "backbone_lr_scale", cfg.optimizer.backbone_lr_scale);
        read_field(*it, "head_lr_scale", cfg.optimizer.head_lr_scale);
    }
    if (const auto it = j.find("pretrain"); it != j.end()) {
        check_keys(*it, "pretrain", {"epochs", "batch_size", "lr", "label_smoothing"});
        read_field(*it, "epochs", cfg.pretrain.epochs);
        read_field(*it, "batch_size", cfg.pretrain.batch_size);
        read_field(*it, "lr", cfg.pretrain.lr);
        read_field(*it, "label_smoothing", cfg.pretrain.label_smoothing);
    }
    if (const auto it = j.find("adapt"); it != j.end()) {
        check_keys(*it, "adapt",
                   {"k", "alpha", "beta_sched", "batch_size", "epochs", "max_iter",
                    "use_division", "neighbor_weights", "division_mode", "hard_air",
                    "dispersion_sep", "tau_aggregate", "bank_refresh_epochs"});
        read_field(*it, "k", cfg.adapt.k);
        read_field(*it, "alpha", cfg.adapt.alpha);
        read_field(*it, "beta_sched", cfg.adapt.beta_sched);
        read_field(*it, "batch_size", cfg.adapt.batch_size);
        read_field(*it, "epochs", cfg.adapt.epochs);
        read_field(*it, "max_iter", cfg.adapt.max_iter);
        read_field(*it, "use_division", cfg.adapt.use_division);
        read_field(*it, "neighbor_weights", cfg.adapt.neighbor_weights);
        if (const auto m = it->find("division_mode"); m != it->end())
            cfg.adapt.division_mode = mode_from(m->get<std::string>());
        read_field(*it, "hard_air", cfg.adapt.hard_air);
        read_field(*it, "dispersion_sep", cfg.adapt.dispersion_sep);
        if (const auto a = it->find("tau_aggregate"); a != it->end())
            cfg.adapt.tau_aggregate = agg_from(a->get<std::string>());
        read_field(*it, "bank_refresh_epochs", cfg.adapt.bank_refresh_epochs);
    }
    if (const auto it = j.find("augment"); it != j.end()) {
        check_keys(*it, "augment",
                   {"weak_sd", "strong_sd", "mask_fraction", "scale_lo", "scale_hi"});
        read_field(*it, "weak_sd", cfg.augment.weak_sd);
        read_field(*it, "strong_sd", cfg.augment.strong_sd);
        read_field(*it, "mask_fraction", cfg.augment.mask_fraction);
        read_field(*it, "scale_lo", cfg.augment.scale_lo);
        read_field(*it, "scale_hi", cfg.augment.scale_hi);
    }
    if (const auto it = j.find("analysis"); it != j.end()) {
        check_keys(*it, "analysis",
                   {"k_list", "all_agree", "reference", "samples_per_point", "xi",
                    "expansion_radius", "expansion_q"});
        read_field(*it, "k_list", cfg.analysis.k_list);
        read_field(*it, "all_agree", cfg.analysis.all_agree);
        read_field(*it, "reference", cfg.analysis.reference);
        read_field(*it, "samples_per_point", cfg.analysis.samples_per_point);
        read_field(*it, "xi", cfg.analysis.xi);
        read_field(*it, "expansion_radius", cfg.analysis.expansion_radius);
        read_field(*it, "expansion_q", cfg.analysis.expansion_q);
    }
    if (const auto it = j.find("ablate"); it != j.end()) {
        check_keys(*it, "ablate", {"num_seeds"});
        read_field(*it, "num_seeds", cfg.ablate.num_seeds);
    }
    validate_config(cfg);
    return cfg;
}

AdaptConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config: parse error in " + path.string() + ": " +
                                 e.what());
    }
    return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const AdaptConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("config: cannot open " + path.string());
    out << config_to_json(cfg).dump(2) << "\n";
    if (!out) throw std::runtime_error("config: write failed for " + path.string());
}

void validate_config(const AdaptConfig& cfg) {
    const auto fail = [](const std::string& msg) {
        throw std::invalid_argument("config: " + msg);
    };
    if (cfg.dataset.generator != "two_moons" &&
        cfg.dataset.generator != "gaussian_mixture")
        fail("dataset.generator must be two_moons or gaussian_mixture");
    if (cfg.dataset.n_per_class == 0) fail("dataset.n_per_class must be positive");
    if (cfg.dataset.noise_sd < 0) fail("dataset.noise_sd must be nonnegative");
    if (cfg.dataset.generator == "gaussian_mixture" && cfg.dataset.num_classes < 2)
        fail("dataset.num_classes must be at least 2");
    if (!cfg.dataset.target_shift.empty() && cfg.dataset.target_shift.size() != 2)
        fail("dataset.target_shift must have 2 entries or be empty");
    if (cfg.model.hidden_dim == 0 || cfg.model.feature_dim == 0)
        fail("model layer widths must be positive");
    if (cfg.optimizer.lr <= 0) fail("optimizer.lr must be positive");
    if (cfg.optimizer.momentum < 0 || cfg.optimizer.momentum >= 1)
        fail("optimizer.momentum must be in [0, 1)");
    if (cfg.optimizer.weight_decay < 0)
        fail("optimizer.weight_decay must be nonnegative");
    if (cfg.optimizer.backbone_lr_scale < 0 || cfg.optimizer.head_lr_scale < 0)
        fail("lr scales must be nonnegative");
    if (cfg.pretrain.batch_size == 0) fail("pretrain.batch_size must be positive");
    if (cfg.pretrain.lr <= 0) fail("pretrain.lr must be positive");
    if (cfg.pretrain.label_smoothing < 0 || cfg.pretrain.label_smoothing >= 1)
        fail("pretrain.label_smoothing must be in [0, 1)");
    if (cfg.adapt.k == 0) fail("adapt.k must be positive");
    if (cfg.adapt.alpha <= 0 || cfg.adapt.alpha >= 1)
        fail("adapt.alpha must be in (0, 1)");
    if (cfg.adapt.beta_sched < 0) fail("adapt.beta_sched must be nonnegative");
    if (cfg.adapt.batch_size == 0) fail("adapt.batch_size must be positive");
    if (cfg.adapt.neighbor_weights != "cosine" && cfg.adapt.neighbor_weights != "ones")
        fail("adapt.neighbor_weights must be cosine or ones");
    if (cfg.augment.weak_sd < 0 || cfg.augment.strong_sd < 0)
        fail("augment magnitudes must be nonnegative");
    const bool identity_pair =
        cfg.augment.weak_sd == 0.0 && cfg.augment.strong_sd == 0.0;
    if (!identity_pair && cfg.augment.weak_sd >= cfg.augment.strong_sd)
        fail("augment.weak_sd must be below augment.strong_sd");
    if (cfg.augment.mask_fraction < 0 || cfg.augment.mask_fraction >= 1)
        fail("augment.mask_fraction must be in [0, 1)");
    if (cfg.augment.scale_lo <= 0 || cfg.augment.scale_hi < cfg.augment.scale_lo)
        fail("augment scale range must be ordered and positive");
    if (cfg.analysis.k_list.empty()) fail("analysis.k_list must not be empty");
    for (const std::size_t k : cfg.analysis.k_list)
        if (k == 0) fail("analysis.k_list entries must be positive");
    if (cfg.analysis.reference != "labels" && cfg.analysis.reference != "source_pred")
        fail("analysis.reference must be labels or source_pred");
    if (cfg.analysis.samples_per_point == 0)
        fail("analysis.samples_per_point must be positive");
    if (cfg.analysis.xi == 1.0) fail("analysis.xi must not equal 1");
    if (cfg.analysis.xi <= 0) fail("analysis.xi must be positive");
    if (cfg.analysis.expansion_radius <= 0)
        fail("analysis.expansion_radius must be positive");
    if (cfg.analysis.expansion_q <= 0 || cfg.analysis.expansion_q > 1)
        fail("analysis.expansion_q must be in (0, 1]");
    if (cfg.ablate.num_seeds == 0) fail("ablate.num_seeds must be positive");
}

std::string config_hash(const AdaptConfig& cfg) {
    const std::string canon = config_to_json(cfg).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

void apply_preset(AdaptConfig& cfg, const std::string& preset) {
    if (preset == "baseline") {
        cfg.adapt.use_division = false;
        cfg.adapt.neighbor_weights = "ones";
    } else if (preset == "alr") {
        cfg.adapt.use_division = false;
        cfg.adapt.neighbor_weights = "cosine";
    } else if (preset == "air") {
        cfg.adapt.use_division = true;
        cfg.adapt.neighbor_weights = "ones";
    } else if (preset == "full") {
        cfg.adapt.use_division = true;
        cfg.adapt.neighbor_weights = "cosine";
    } else {
        throw std::invalid_argument(
            "preset must be one of baseline, alr, air, full; got '" + preset + "'");
    }
}

void apply_override(nlohmann::json& doc, const std::string& dotted_key,
                    const std::string& value) {
    json* node = &doc;
    std::size_t start = 0;
    std::string leaf;
    while (true) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(
            start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw std::invalid_argument("override: empty path segment in '" +
                                        dotted_key + "'");
        if (dot == std::string::npos) {
            leaf = part;
            break;
        }
        if (!node->contains(part))
            throw std::invalid_argument("override: unknown key '" + dotted_key + "'");
        node = &(*node)[part];
        start = dot + 1;
    }
    if (!node->is_object() || !node->contains(leaf))
        throw std::invalid_argument("override: unknown key '" + dotted_key + "'");
    const json parsed = json::parse(value, nullptr, false);
    (*node)[leaf] = parsed.is_discarded() ? json(value) : parsed;
}

std::size_t dataset_num_classes(const DatasetConfig& cfg) {
    return cfg.generator == "two_moons" ? 2 : cfg.num_classes;
}

std::uint64_t effective_dataset_seed(const AdaptConfig& cfg) {
    if (cfg.dataset.seed != 0) return cfg.dataset.seed;
    return cfg.seed * 0x9e3779b97f4a7c15ULL + 1;
}

std::size_t dataset_input_dim(const DatasetConfig&) {
    return 2; // both generators emit planar data
}

} // namespace alt
