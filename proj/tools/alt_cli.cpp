// Command-line front end: pretrain / adapt / analyze / ablate, all driven by
// one JSON config plus flag overrides. Every failure path exits nonzero with
// a single-line error on stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "alt/config.hpp"
#include "alt/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string preset;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    f.seed_opt = cmd->add_option("--seed", f.seed, "Run seed override");
    f.out_opt = cmd->add_option("--out", f.out_dir, "Output directory override");
    cmd->add_option("--preset", f.preset,
                    "Ablation preset: baseline, alr, air, full");
    cmd->add_option("--set", f.sets,
                    "Dotted-path config override, e.g. adapt.k=5 (repeatable)");
}

alt::AdaptConfig resolve_config(const CommonFlags& f) {
    alt::AdaptConfig cfg = f.config_path.empty()
                               ? alt::AdaptConfig{}
                               : alt::load_config(f.config_path);
    if (!f.preset.empty()) alt::apply_preset(cfg, f.preset);
    if (!f.sets.empty()) {
        nlohmann::json doc = alt::config_to_json(cfg);
        for (const std::string& kv : f.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0)
                throw std::invalid_argument("--set expects key=value, got '" + kv +
                                            "'");
            alt::apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg = alt::config_from_json(doc);
    }
    if (f.seed_opt->count() > 0) cfg.seed = f.seed;
    if (f.out_opt->count() > 0) cfg.out_dir = f.out_dir;
    alt::validate_config(cfg);
    return cfg;
}

void echo_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return;
    std::cout << in.rdbuf();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"alt: source-free adaptation of a small classifier to a "
                 "shifted synthetic domain"};
    app.require_subcommand(1);

    CommonFlags f_pre;
    CLI::App* pre = app.add_subcommand("pretrain", "Train the source model");
    add_common(pre, f_pre);

    CommonFlags f_adapt;
    std::string adapt_ckpt;
    CLI::App* adapt = app.add_subcommand(
        "adapt", "Adapt a source checkpoint to the target domain");
    add_common(adapt, f_adapt);
    adapt->add_option("--checkpoint", adapt_ckpt,
                      "Source checkpoint (default <out>/source.ckpt, trained "
                      "first when missing)");

    CommonFlags f_analyze;
    std::string analyze_ckpt;
    std::string analyze_bank;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Geometry and bound diagnostics for a checkpoint");
    add_common(analyze, f_analyze);
    analyze->add_option("--checkpoint", analyze_ckpt,
                        "Checkpoint to analyze (default <out>/adapted.ckpt, "
                        "then <out>/source.ckpt)");
    analyze->add_option("--bank", analyze_bank,
                        "Saved bank to audit instead of rebuilding one")
        ->check(CLI::ExistingFile);

    CommonFlags f_ablate;
    CLI::App* ablate = app.add_subcommand(
        "ablate", "Preset x seed grid with a summary table");
    add_common(ablate, f_ablate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) {
            const alt::AdaptConfig cfg = resolve_config(f_pre);
            alt::cmd_pretrain(cfg);
            echo_file(fs::path(cfg.out_dir) / "pretrain_summary.txt");
        } else if (adapt->parsed()) {
            const alt::AdaptConfig cfg = resolve_config(f_adapt);
            fs::path ckpt = adapt_ckpt.empty()
                                ? fs::path(cfg.out_dir) / "source.ckpt"
                                : fs::path(adapt_ckpt);
            if (adapt_ckpt.empty() && !fs::exists(ckpt))
                ckpt = alt::cmd_pretrain(cfg);
            alt::cmd_adapt(cfg, ckpt);
            echo_file(fs::path(cfg.out_dir) / "summary.txt");
        } else if (analyze->parsed()) {
            const alt::AdaptConfig cfg = resolve_config(f_analyze);
            fs::path ckpt(analyze_ckpt);
            if (ckpt.empty()) {
                const fs::path adapted = fs::path(cfg.out_dir) / "adapted.ckpt";
                const fs::path source = fs::path(cfg.out_dir) / "source.ckpt";
                if (fs::exists(adapted))
                    ckpt = adapted;
                else if (fs::exists(source))
                    ckpt = source;
                else
                    throw std::invalid_argument(
                        "no checkpoint in " + cfg.out_dir + "; pass --checkpoint");
            }
            alt::cmd_analyze(cfg, ckpt, fs::path(analyze_bank));
            echo_file(fs::path(cfg.out_dir) / "analysis_summary.txt");
        } else if (ablate->parsed()) {
            const alt::AdaptConfig cfg = resolve_config(f_ablate);
            alt::cmd_ablate(cfg);
            echo_file(fs::path(cfg.out_dir) / "ablate_summary.txt");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
