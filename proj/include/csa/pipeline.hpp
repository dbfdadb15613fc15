#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "csa/config.hpp"
#include "csa/importer.hpp"
#include "csa/judge.hpp"
#include "csa/manifest.hpp"
#include "csa/reward.hpp"
#include "csa/sampling.hpp"
#include "csa/scoring.hpp"

namespace csa {

// Shared options for every stage command.
struct StageIo {
    std::string in;
    std::string out;
    bool dry_run = false;
};

namespace detail {

inline StageManifest begin_manifest(const PipelineConfig& cfg, std::string stage) {
    StageManifest m;
    m.stage = std::move(stage);
    m.config = cfg.snapshot;
    return m;
}

inline std::string rejects_path_for(const std::string& out) { return out + ".rejects.jsonl"; }

inline void finish_stage(StageManifest& manifest, const StageIo& io) {
    if (io.dry_run) return;
    write_manifest(manifest, manifest_path_for(io.out));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// import
// ---------------------------------------------------------------------------

inline StageManifest run_import(const PipelineConfig& cfg, const std::string& format,
                                const StageIo& io, bool split) {
    auto manifest = detail::begin_manifest(cfg, "import");
    const auto text = read_file(io.in);
    add_input(manifest, io.in);

    ImportResult result;
    if (format == "ed-csv") {
        result = import_ed_csv(text, load_emotions_for(cfg));
    } else if (format == "jsonl") {
        result = import_jsonl_dialogues(text);
    } else {
        throw UsageError("unknown import format '" + format + "' (expected ed-csv or jsonl)");
    }

    manifest.counts["imported"] = static_cast<std::int64_t>(result.dialogues.size());
    manifest.counts["rejected"] = static_cast<std::int64_t>(result.rejects.size());
    if (io.dry_run) return manifest;

    if (split) {
        std::map<SplitBucket, std::vector<DialogueContext>> buckets;
        for (auto& d : result.dialogues) buckets[split_bucket(d.dialogue_id)].push_back(d);
        for (auto bucket : {SplitBucket::train, SplitBucket::valid, SplitBucket::test}) {
            const auto path = io.out + "." + std::string(split_suffix(bucket)) + ".jsonl";
            write_jsonl(path, buckets[bucket]);
            add_output(manifest, path);
            manifest.counts[std::string(split_suffix(bucket))] =
                static_cast<std::int64_t>(buckets[bucket].size());
        }
    } else {
        write_jsonl(io.out, result.dialogues);
        add_output(manifest, io.out);
    }
    const auto rejects_path = detail::rejects_path_for(io.out);
    write_jsonl(rejects_path, result.rejects);
    add_output(manifest, rejects_path);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// annotate
// ---------------------------------------------------------------------------

inline StageManifest run_annotate(const PipelineConfig& cfg, const StageIo& io) {
    auto manifest = detail::begin_manifest(cfg, "annotate");
    const auto dialogues = read_dialogues(io.in);
    add_input(manifest, io.in);

    auto result = annotate_dataset(dialogues, cfg.annotator, load_catalog_for(cfg), cfg.judge);
    manifest.counts["annotated"] = static_cast<std::int64_t>(result.samples.size());
    manifest.counts["rejected"] = static_cast<std::int64_t>(result.rejects.size());
    manifest.counts["requests"] = static_cast<std::int64_t>(result.request_count);
    if (io.dry_run) return manifest;

    write_jsonl(io.out, result.samples);
    add_output(manifest, io.out);
    const auto rejects_path = detail::rejects_path_for(io.out);
    write_jsonl(rejects_path, result.rejects);
    add_output(manifest, rejects_path);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

inline StageManifest run_judge(const PipelineConfig& cfg, const StageIo& io) {
    auto manifest = detail::begin_manifest(cfg, "judge");
    const auto samples = read_samples(io.in);
    add_input(manifest, io.in);

    auto result = score_dataset_with_panel(samples, cfg.panel, cfg.judge);
    manifest.counts["scored"] = static_cast<std::int64_t>(result.matrix.sample_count());
    manifest.counts["excluded"] = static_cast<std::int64_t>(result.exclusions.size());
    manifest.counts["requests"] = static_cast<std::int64_t>(result.request_count);
    if (io.dry_run) return manifest;

    std::vector<ScoreRow> rows;
    rows.reserve(result.matrix.sample_count());
    for (std::size_t i = 0; i < result.matrix.sample_count(); ++i) {
        ScoreRow row;
        row.sample_id = result.matrix.sample_ids[i];
        for (const auto& [judge, scores] : result.matrix.scores_by_judge) {
            row.scores[judge] = static_cast<int>(scores[i]);
        }
        rows.push_back(std::move(row));
    }
    write_jsonl(io.out, rows);
    add_output(manifest, io.out);
    const auto exclusions_path = io.out + ".exclusions.jsonl";
    write_jsonl(exclusions_path, result.exclusions);
    add_output(manifest, exclusions_path);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

inline ScoreMatrix matrix_from_rows(const std::vector<ScoreRow>& rows) {
    ScoreMatrix matrix;
    if (rows.empty()) return matrix;
    const auto& panel = rows.front().scores;
    for (const auto& [judge, score] : panel) matrix.scores_by_judge[judge] = {};
    for (const auto& row : rows) {
        if (row.scores.size() != panel.size()) {
            throw PanelMismatch("sample '" + row.sample_id +
                                "' scored by a different judge set");
        }
        matrix.sample_ids.push_back(row.sample_id);
        for (const auto& [judge, score] : row.scores) {
            auto it = matrix.scores_by_judge.find(judge);
            if (it == matrix.scores_by_judge.end()) {
                throw PanelMismatch("sample '" + row.sample_id + "' scored by unknown judge '" +
                                    judge + "'");
            }
            it->second.push_back(static_cast<double>(score));
        }
    }
    return matrix;
}

inline StageManifest run_rank(const PipelineConfig& cfg, const StageIo& io,
                              std::optional<int> k_override) {
    auto manifest = detail::begin_manifest(cfg, "rank");
    const auto rows = read_score_rows(io.in);
    add_input(manifest, io.in);

    const auto matrix = matrix_from_rows(rows);
    const auto weights = reliability_weights(matrix, cfg.min_weight);

    std::map<std::string, QualityScore> by_id;
    std::vector<QualityScore> scored;
    scored.reserve(rows.size());
    for (const auto& row : rows) {
        auto q = aggregate_score(row.sample_id, row.scores, weights, cfg.lambda, cfg.sigma_mode);
        by_id[row.sample_id] = q;
        scored.push_back(std::move(q));
    }
    const int k = k_override.value_or(cfg.top_k);
    if (k < 1) throw UsageError("k must be >= 1");
    const auto selected = rank_and_select(scored, static_cast<std::size_t>(k));

    manifest.counts["scored"] = static_cast<std::int64_t>(scored.size());
    manifest.counts["selected"] = static_cast<std::int64_t>(selected.size());
    if (io.dry_run) return manifest;

    std::vector<RankedRow> ranked;
    ranked.reserve(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto& q = by_id.at(selected[i]);
        ranked.push_back(RankedRow{q.sample_id, q.aggregate, q.sigma, static_cast<int>(i + 1)});
    }
    write_jsonl(io.out, ranked);
    add_output(manifest, io.out);

    json weights_json{{"rho", weights.rho},
                      {"normalized", weights.normalized},
                      {"warnings", weights.warnings}};
    const auto weights_path = io.out + ".weights.json";
    write_text_file(weights_path, weights_json.dump(2) + "\n");
    add_output(manifest, weights_path);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

inline json plan_to_json(const SamplingPlan& plan, const StrategyCatalog& catalog) {
    const auto names = [&](const std::map<int, double>& m) {
        json out = json::object();
        for (const auto& [id, v] : m) out[catalog.by_id(id).name] = v;
        return out;
    };
    json quotas = json::object();
    for (const auto& [id, q] : plan.quotas) quotas[catalog.by_id(id).name] = q;
    return json{{"frequencies", names(plan.frequencies)},
                {"difficulty", names(plan.difficulty)},
                {"proportions", names(plan.proportions)},
                {"subset_size", plan.subset_size},
                {"quotas", std::move(quotas)},
                {"seed", plan.seed},
                {"feasibility_rule", "floor"}};
}

inline StageManifest run_sample(const PipelineConfig& cfg, const StageIo& io,
                                const std::string& ranking_path,
                                const std::string& plan_path, std::optional<int> n_override,
                                std::optional<std::uint64_t> seed_override) {
    auto manifest = detail::begin_manifest(cfg, "sample");
    const auto full = read_samples(io.in);
    add_input(manifest, io.in);
    const auto ranking = read_ranked_rows(ranking_path);
    add_input(manifest, ranking_path);

    const auto seed = seed_override ? seed_override : cfg.seed;
    if (!seed) throw ConfigError("sampling requires a seed (config key 'seed' or --seed)");
    manifest.seed = *seed;

    const auto catalog = load_catalog_for(cfg);

    std::map<std::string, const AnnotatedSample*> by_id;
    for (const auto& s : full) by_id[s.sample_id] = &s;
    std::vector<AnnotatedSample> pool;
    pool.reserve(ranking.size());
    for (const auto& row : ranking) {
        auto it = by_id.find(row.sample_id);
        if (it == by_id.end()) {
            throw AssemblyError("ranked sample '" + row.sample_id +
                                "' is not in the annotated dataset");
        }
        pool.push_back(*it->second);
    }

    const auto frequencies = empirical_frequencies(full, catalog);
    std::map<int, double> difficulty;
    for (const auto& def : catalog.strategies()) {
        difficulty[def.id] = catalog.difficulty_weights().at(def.difficulty);
    }
    const int n_max = n_override.value_or(cfg.sample_n);
    const auto plan = make_plan(frequencies, difficulty, strategy_counts(pool, catalog), n_max,
                                *seed);
    const auto sampled = stratified_sample(pool, plan.quotas, plan.seed, catalog);

    manifest.counts["pool"] = static_cast<std::int64_t>(pool.size());
    manifest.counts["sampled"] = static_cast<std::int64_t>(sampled.size());
    manifest.counts["subset_size"] = plan.subset_size;
    if (io.dry_run) return manifest;

    write_jsonl(io.out, sampled);
    add_output(manifest, io.out);
    write_text_file(plan_path, plan_to_json(plan, catalog).dump(2) + "\n");
    add_output(manifest, plan_path);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// assemble
// ---------------------------------------------------------------------------

inline StageManifest run_assemble(const PipelineConfig& cfg, const StageIo& io,
                                  const std::string& full_path) {
    auto manifest = detail::begin_manifest(cfg, "assemble");
    const auto refined = read_samples(io.in);
    add_input(manifest, io.in);
    const auto full = read_samples(full_path);
    add_input(manifest, full_path);

    const auto corpus = assemble_sft_corpus(refined, full);
    std::int64_t supervised = 0;
    for (const auto& s : corpus) {
        if (s.annotation.strategy) ++supervised;
    }
    manifest.counts["total"] = static_cast<std::int64_t>(corpus.size());
    manifest.counts["strategy_supervised"] = supervised;
    manifest.counts["strategy_stripped"] = static_cast<std::int64_t>(corpus.size()) - supervised;
    if (io.dry_run) return manifest;

    write_jsonl(io.out, corpus);
    add_output(manifest, io.out);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// reward
// ---------------------------------------------------------------------------

inline StageManifest run_reward(const PipelineConfig& cfg, const StageIo& io) {
    auto manifest = detail::begin_manifest(cfg, "reward");
    const auto rollouts = read_rollouts(io.in);
    add_input(manifest, io.in);

    const auto catalog = load_catalog_for(cfg);
    RewardOptions options;
    options.reward_when_gold_strategy_absent = cfg.reward_when_gold_strategy_absent;

    std::vector<RewardRecord> records;
    records.reserve(rollouts.size());
    std::map<int, std::int64_t> histogram{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    for (const auto& r : rollouts) {
        Annotation gold;
        gold.emotion = r.gold_emotion;
        gold.strategy = r.gold_strategy;
        if (gold.strategy) gold.actions = std::string{};
        gold.response = "-";
        auto breakdown = score_rollout(r.rollout, gold, catalog, options);
        histogram[breakdown.total] += 1;
        records.push_back(RewardRecord{r.sample_id, breakdown});
    }
    manifest.counts["records"] = static_cast<std::int64_t>(records.size());
    for (const auto& [total, count] : histogram) {
        manifest.counts["total_" + std::to_string(total)] = count;
    }
    if (io.dry_run) return manifest;

    write_jsonl(io.out, records);
    add_output(manifest, io.out);
    detail::finish_stage(manifest, io);
    return manifest;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsReport {
    std::int64_t total = 0;
    std::int64_t strategy_stripped = 0;
    std::map<int, std::int64_t> strategy_counts;       // id -> count
    std::map<std::string, double> difficulty_mass;     // tier name -> frequency mass
    std::map<std::string, std::int64_t> emotion_histogram;
    // present when a plan file is supplied: id -> (realized count, target n*p)
    std::map<int, std::pair<std::int64_t, double>> plan_deltas;
};

inline StatsReport run_stats(const PipelineConfig& cfg, const std::string& in,
                             const std::optional<std::string>& plan_path) {
    const auto samples = read_samples(in);
    const auto catalog = load_catalog_for(cfg);

    StatsReport report;
    report.total = static_cast<std::int64_t>(samples.size());
    for (const auto& def : catalog.strategies()) report.strategy_counts[def.id] = 0;
    for (const auto& s : samples) {
        report.emotion_histogram[s.annotation.emotion.name] += 1;
        if (!s.annotation.strategy) {
            ++report.strategy_stripped;
            continue;
        }
        report.strategy_counts[resolve_strategy(*s.annotation.strategy, catalog).id] += 1;
    }
    const auto annotated = report.total - report.strategy_stripped;
    for (const auto& def : catalog.strategies()) {
        if (annotated > 0) {
            report.difficulty_mass[std::string(difficulty_name(def.difficulty))] +=
                static_cast<double>(report.strategy_counts[def.id]) /
                static_cast<double>(annotated);
        }
    }

    if (plan_path) {
        json plan = json::parse(read_file(*plan_path));
        const auto n = plan.at("subset_size").get<int>();
        for (const auto& [name, p] : plan.at("proportions").items()) {
            const auto& def = resolve_strategy(name, catalog);
            report.plan_deltas[def.id] = {report.strategy_counts[def.id],
                                          p.get<double>() * n};
        }
    }
    return report;
}

}  // namespace csa
