// csa: strategy-aware refinement pipeline for empathetic-dialogue corpora.
//
// Stage-per-command with file handoff; every stage writes a manifest with
// input/output hashes so any run can be audited and reproduced byte for byte.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "csa/pipeline.hpp"

namespace {

struct CommonArgs {
    std::optional<std::string> config_path;
    std::string in;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--in", args.in, "input path");
    cmd->add_option("--out", args.out, "output path");
    cmd->add_option("--seed", args.seed, "seed override for this run");
    cmd->add_flag("--dry-run", args.dry_run, "validate and report without writing outputs");
}

csa::PipelineConfig resolve_config(const CommonArgs& args) {
    auto cfg = csa::load_config(args.config_path);
    if (args.seed) cfg.seed = args.seed;
    return cfg;
}

std::string pick(const std::string& flag_value, const std::string& config_value,
                 const char* what) {
    if (!flag_value.empty()) return flag_value;
    if (!config_value.empty()) return config_value;
    throw csa::UsageError(std::string("no path for ") + what +
                          " (pass --in/--out or set it in the config)");
}

void print_summary(const csa::StageManifest& manifest, bool dry_run) {
    std::cout << "[" << manifest.stage << "]";
    if (dry_run) std::cout << " (dry-run)";
    for (const auto& [key, value] : manifest.counts) {
        std::cout << ' ' << key << '=' << value;
    }
    for (const auto& [path, hash] : manifest.outputs) {
        std::cout << "\n  wrote " << path << " sha256=" << hash.substr(0, 12);
    }
    std::cout << '\n';
}

void print_stats(const csa::StatsReport& report, const csa::StrategyCatalog& catalog) {
    std::printf("samples: %lld (strategy-stripped: %lld)\n",
                static_cast<long long>(report.total),
                static_cast<long long>(report.strategy_stripped));
    const auto annotated = report.total - report.strategy_stripped;
    std::printf("%-4s %-34s %-6s %8s %10s\n", "id", "strategy", "tier", "count", "freq");
    for (const auto& def : catalog.strategies()) {
        const auto count = report.strategy_counts.at(def.id);
        const double freq =
            annotated > 0 ? static_cast<double>(count) / static_cast<double>(annotated) : 0.0;
        std::printf("%-4d %-34s %-6s %8lld %10.4f\n", def.id, def.name.c_str(),
                    std::string(csa::difficulty_name(def.difficulty)).c_str(),
                    static_cast<long long>(count), freq);
    }
    std::printf("difficulty mass:");
    for (const auto& [tier, mass] : report.difficulty_mass) {
        std::printf("  %s=%.4f", tier.c_str(), mass);
    }
    std::printf("\nemotions:\n");
    for (const auto& [emotion, count] : report.emotion_histogram) {
        std::printf("  %-16s %8lld\n", emotion.c_str(), static_cast<long long>(count));
    }
    if (!report.plan_deltas.empty()) {
        std::printf("realized vs plan target:\n");
        for (const auto& [id, pair] : report.plan_deltas) {
            const auto [realized, target] = pair;
            std::printf("  %-34s realized=%lld target=%.3f delta=%+.3f\n",
                        catalog.by_id(id).name.c_str(), static_cast<long long>(realized),
                        target, static_cast<double>(realized) - target);
        }
    }
}

int exit_code_for(const csa::Error& e) {
    const auto& kind = e.kind();
    if (kind == "UsageError") return 2;
    if (kind == "IoError") return 3;
    if (kind == "TransportError" || kind == "JudgeHttpError") return 5;
    return 4;  // validation and data errors
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strategy-aware refinement pipeline for empathetic-dialogue corpora"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* cmd_import = app.add_subcommand("import", "convert raw dialogues to canonical JSONL");
    std::string format = "ed-csv";
    bool split = false;
    cmd_import->add_option("--format", format, "source format: ed-csv or jsonl");
    cmd_import->add_flag("--split", split, "write hash-based 8:1:1 train/valid/test files");
    add_common(cmd_import, args);

    auto* cmd_annotate = app.add_subcommand("annotate", "annotate dialogues through the judge");
    add_common(cmd_annotate, args);

    auto* cmd_judge = app.add_subcommand("judge", "score annotated samples with the panel");
    add_common(cmd_judge, args);

    auto* cmd_rank = app.add_subcommand("rank", "aggregate panel scores and select the top k");
    std::optional<int> k;
    cmd_rank->add_option("--k", k, "pool size (default: config top_k)");
    add_common(cmd_rank, args);

    auto* cmd_sample = app.add_subcommand("sample", "stratified sampling of the ranked pool");
    std::string ranking_path;
    std::string plan_path;
    std::optional<int> n;
    cmd_sample->add_option("--ranking", ranking_path, "ranking file from the rank stage")
        ->required();
    cmd_sample->add_option("--plan", plan_path, "plan output path (default: <out>.plan.json)");
    cmd_sample->add_option("--n", n, "subset size upper bound (default: config sample_n)");
    add_common(cmd_sample, args);

    auto* cmd_assemble = app.add_subcommand("assemble", "mix refined and strategy-stripped data");
    std::string full_path;
    cmd_assemble->add_option("--full", full_path, "full annotated dataset")->required();
    add_common(cmd_assemble, args);

    auto* cmd_reward = app.add_subcommand("reward", "score rollouts against gold annotations");
    add_common(cmd_reward, args);

    auto* cmd_stats = app.add_subcommand("stats", "report dataset composition");
    std::optional<std::string> stats_plan;
    cmd_stats->add_option("--plan", stats_plan, "plan file for realized-vs-target deltas");
    add_common(cmd_stats, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        auto cfg = resolve_config(args);
        csa::StageIo io{args.in, args.out, args.dry_run};

        if (cmd_import->parsed()) {
            io.in = pick(args.in, cfg.raw_path, "import input");
            io.out = pick(args.out, cfg.dialogues_path, "import output");
            print_summary(csa::run_import(cfg, format, io, split), io.dry_run);
        } else if (cmd_annotate->parsed()) {
            io.in = pick(args.in, cfg.dialogues_path, "annotate input");
            io.out = pick(args.out, cfg.annotated_path, "annotate output");
            print_summary(csa::run_annotate(cfg, io), io.dry_run);
        } else if (cmd_judge->parsed()) {
            io.in = pick(args.in, cfg.annotated_path, "judge input");
            io.out = pick(args.out, cfg.scores_path, "judge output");
            print_summary(csa::run_judge(cfg, io), io.dry_run);
        } else if (cmd_rank->parsed()) {
            io.in = pick(args.in, cfg.scores_path, "rank input");
            io.out = pick(args.out, cfg.ranked_path, "rank output");
            print_summary(csa::run_rank(cfg, io, k), io.dry_run);
        } else if (cmd_sample->parsed()) {
            io.in = pick(args.in, cfg.annotated_path, "sample input");
            io.out = pick(args.out, cfg.sampled_path, "sample output");
            const auto plan_out = !plan_path.empty()          ? plan_path
                                  : !cfg.plan_path.empty()    ? cfg.plan_path
                                                              : io.out + ".plan.json";
            print_summary(csa::run_sample(cfg, io, ranking_path, plan_out, n, args.seed),
                          io.dry_run);
        } else if (cmd_assemble->parsed()) {
            io.in = pick(args.in, cfg.sampled_path, "assemble input");
            io.out = pick(args.out, cfg.sft_path, "assemble output");
            print_summary(csa::run_assemble(cfg, io, full_path), io.dry_run);
        } else if (cmd_reward->parsed()) {
            io.in = pick(args.in, "", "reward input");
            io.out = pick(args.out, cfg.rewards_path, "reward output");
            print_summary(csa::run_reward(cfg, io), io.dry_run);
        } else if (cmd_stats->parsed()) {
            io.in = pick(args.in, cfg.annotated_path, "stats input");
            print_stats(csa::run_stats(cfg, io.in, stats_plan), csa::load_catalog_for(cfg));
        }
        return 0;
    } catch (const csa::Error& e) {
        std::cerr << csa::json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << csa::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
}
