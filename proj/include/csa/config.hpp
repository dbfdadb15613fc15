#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "csa/errors.hpp"
#include "csa/hash.hpp"
#include "csa/judge.hpp"
#include "csa/scoring.hpp"
#include "csa/strategy.hpp"

namespace csa {

// Pipeline configuration. Sources, lowest to highest precedence: built-in
// defaults, a flat key=value file, CSA_-prefixed environment variables, then
// command-line flags.
struct PipelineConfig {
    // dataset paths; stages fall back to these when --in/--out are not given
    std::string raw_path;
    std::string dialogues_path;
    std::string annotated_path;
    std::string scores_path;
    std::string ranked_path;
    std::string sampled_path;
    std::string plan_path;
    std::string sft_path;
    std::string rewards_path;

    JudgeId annotator{"annotator", "mock:7:valid-annotator"};
    std::vector<JudgeId> panel;

    double lambda = 0.1;
    int top_k = 12000;
    double min_weight = 0.0;
    SigmaMode sigma_mode = SigmaMode::population;

    std::map<Difficulty, double> difficulty_weights = default_difficulty_weights();
    std::optional<std::uint64_t> seed;
    int sample_n = 5000;  // upper bound fed to the feasibility search

    JudgeOptions judge;

    bool reward_when_gold_strategy_absent = true;

    std::string catalog_path;   // empty: use the built-in catalog
    std::string emotions_path;  // empty: use the built-in label set

    // raw key=value view, captured for manifests
    std::map<std::string, std::string> snapshot;
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& value) {
    auto v = to_lower(trim(value));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long out = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

// panel=name=endpoint,name=endpoint,...
inline std::vector<JudgeId> parse_panel(const std::string& value) {
    std::vector<JudgeId> panel;
    for (const auto& entry : split(value, ',')) {
        auto t = trim(entry);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos ||
            t.substr(0, eq).find_first_of(":/") != std::string::npos) {
            throw ConfigError("config key 'panel': expected name=endpoint, got '" + t + "'");
        }
        panel.push_back(JudgeId{trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
    }
    return panel;
}

inline JudgeId parse_judge(const std::string& key, const std::string& value) {
    auto eq = value.find('=');
    // name=endpoint, unless the '=' sits inside a bare endpoint (query string)
    if (eq != std::string::npos &&
        value.substr(0, eq).find_first_of(":/") == std::string::npos) {
        return JudgeId{trim(value.substr(0, eq)), trim(value.substr(eq + 1))};
    }
    return JudgeId{key, trim(value)};
}

}  // namespace detail

inline void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
    cfg.snapshot[key] = value;
    if (key == "raw") cfg.raw_path = value;
    else if (key == "dialogues") cfg.dialogues_path = value;
    else if (key == "annotated") cfg.annotated_path = value;
    else if (key == "scores") cfg.scores_path = value;
    else if (key == "ranked") cfg.ranked_path = value;
    else if (key == "sampled") cfg.sampled_path = value;
    else if (key == "plan") cfg.plan_path = value;
    else if (key == "sft") cfg.sft_path = value;
    else if (key == "rewards") cfg.rewards_path = value;
    else if (key == "annotator") cfg.annotator = detail::parse_judge(key, value);
    else if (key == "panel") cfg.panel = detail::parse_panel(value);
    else if (key == "lambda") cfg.lambda = detail::parse_double(key, value);
    else if (key == "top_k") cfg.top_k = static_cast<int>(detail::parse_int(key, value));
    else if (key == "min_weight") cfg.min_weight = detail::parse_double(key, value);
    else if (key == "sample_n") cfg.sample_n = static_cast<int>(detail::parse_int(key, value));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
    else if (key == "sigma") {
        auto v = to_lower(trim(value));
        if (v == "population") cfg.sigma_mode = SigmaMode::population;
        else if (v == "sample") cfg.sigma_mode = SigmaMode::sample;
        else throw ConfigError("config key 'sigma': expected population or sample");
    } else if (key == "difficulty_weights") {
        auto parts = split(value, ',');
        if (parts.size() != 3) {
            throw ConfigError("config key 'difficulty_weights': expected three values w1,w2,w3");
        }
        cfg.difficulty_weights = {
            {Difficulty::I, detail::parse_double(key, trim(parts[0]))},
            {Difficulty::II, detail::parse_double(key, trim(parts[1]))},
            {Difficulty::III, detail::parse_double(key, trim(parts[2]))}};
    } else if (key == "model") cfg.judge.model = value;
    else if (key == "temperature") cfg.judge.temperature = detail::parse_double(key, value);
    else if (key == "api_key_env") cfg.judge.api_key_env = value;
    else if (key == "retries") cfg.judge.retry.max_retries = static_cast<int>(detail::parse_int(key, value));
    else if (key == "timeout_s") cfg.judge.retry.timeout_seconds = detail::parse_double(key, value);
    else if (key == "backoff_ms") cfg.judge.retry.backoff_base_ms = static_cast<int>(detail::parse_int(key, value));
    else if (key == "concurrency") cfg.judge.concurrency = static_cast<int>(detail::parse_int(key, value));
    else if (key == "reward_gold_absent_strategy")
        cfg.reward_when_gold_strategy_absent = detail::parse_bool(key, value);
    else if (key == "catalog") cfg.catalog_path = value;
    else if (key == "emotions") cfg.emotions_path = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "raw", "dialogues", "annotated", "scores", "ranked", "sampled", "plan", "sft",
        "rewards", "annotator", "panel", "lambda", "top_k", "min_weight", "sample_n",
        "seed", "sigma", "difficulty_weights", "model", "temperature", "api_key_env",
        "retries", "timeout_s", "backoff_ms", "concurrency",
        "reward_gold_absent_strategy", "catalog", "emotions"};
    return keys;
}

inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (cfg.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (cfg.sample_n < 1) throw ConfigError("sample_n must be >= 1");
    if (cfg.judge.concurrency < 1) throw ConfigError("concurrency must be >= 1");
    if (cfg.judge.retry.max_retries < 0) throw ConfigError("retries must be >= 0");
    StrategyCatalog(default_strategy_catalog().strategies(), cfg.difficulty_weights);
}

inline bool is_path_key(const std::string& key) {
    static const std::set<std::string> keys{"raw",  "dialogues", "annotated", "scores",
                                            "ranked", "sampled", "plan",      "sft",
                                            "rewards", "catalog", "emotions"};
    return keys.contains(key);
}

// key=value per line; blank lines and # comments ignored. Relative paths are
// resolved against base_dir (the config file's directory) when given.
inline void load_config_text(PipelineConfig& cfg, std::string_view text,
                             const std::string& origin, const std::string& base_dir = {}) {
    int line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        auto line = trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (!base_dir.empty() && !value.empty() && is_path_key(key) &&
            std::filesystem::path(value).is_relative()) {
            value = (std::filesystem::path(base_dir) / value).string();
        }
        apply_config_entry(cfg, key, value);
    }
}

// CSA_<KEY> environment overrides, e.g. CSA_LAMBDA, CSA_TOP_K, CSA_PANEL.
inline void apply_env_overrides(PipelineConfig& cfg) {
    for (const auto& key : config_keys()) {
        std::string env_name = "CSA_";
        for (char c : key) {
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        if (const char* value = std::getenv(env_name.c_str())) {
            apply_config_entry(cfg, key, value);
        }
    }
}

inline PipelineConfig load_config(const std::optional<std::string>& path,
                                  bool with_env = true) {
    PipelineConfig cfg;
    if (path) {
        const auto base_dir = std::filesystem::path(*path).parent_path().string();
        load_config_text(cfg, read_file(*path), *path, base_dir);
    }
    if (with_env) apply_env_overrides(cfg);
    validate_config(cfg);
    return cfg;
}

// Resources resolved through the config.
inline StrategyCatalog load_catalog_for(const PipelineConfig& cfg) {
    if (cfg.catalog_path.empty()) {
        return StrategyCatalog(default_strategy_catalog().strategies(), cfg.difficulty_weights);
    }
    return load_strategy_catalog(read_file(cfg.catalog_path), cfg.difficulty_weights);
}

inline EmotionSet load_emotions_for(const PipelineConfig& cfg) {
    if (cfg.emotions_path.empty()) return default_emotion_set();
    return load_emotion_set(read_file(cfg.emotions_path));
}

}  // namespace csa
