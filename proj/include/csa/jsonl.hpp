#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "csa/errors.hpp"
#include "csa/reward.hpp"
#include "csa/strategy.hpp"

namespace csa {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// record <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const Utterance& u) {
    return json{{"role", role_name(u.role)}, {"text", u.text}, {"turn_index", u.turn_index}};
}

inline Utterance utterance_from_json(const json& j) {
    Utterance u;
    u.role = role_from_name(j.at("role").get<std::string>());
    u.text = j.at("text").get<std::string>();
    u.turn_index = j.at("turn_index").get<int>();
    return u;
}

inline json to_json(const DialogueContext& d) {
    json utterances = json::array();
    for (const auto& u : d.utterances) utterances.push_back(to_json(u));
    json j{{"dialogue_id", d.dialogue_id}, {"utterances", std::move(utterances)}};
    if (d.emotion_gold) j["emotion_gold"] = d.emotion_gold->name;
    return j;
}

inline DialogueContext dialogue_from_json(const json& j) {
    DialogueContext d;
    d.dialogue_id = j.at("dialogue_id").get<std::string>();
    for (const auto& u : j.at("utterances")) d.utterances.push_back(utterance_from_json(u));
    if (j.contains("emotion_gold") && !j.at("emotion_gold").is_null()) {
        d.emotion_gold = EmotionLabel(j.at("emotion_gold").get<std::string>());
    }
    return d;
}

inline json to_json(const Annotation& a) {
    json j{{"summary", a.summary}, {"emotion", a.emotion.name}, {"response", a.response}};
    if (a.strategy) j["strategy"] = *a.strategy;
    if (a.actions) j["actions"] = *a.actions;
    return j;
}

inline Annotation annotation_from_json(const json& j) {
    Annotation a;
    a.summary = j.at("summary").get<std::string>();
    a.emotion = EmotionLabel(j.at("emotion").get<std::string>());
    a.response = j.at("response").get<std::string>();
    if (j.contains("strategy") && !j.at("strategy").is_null()) {
        a.strategy = j.at("strategy").get<std::string>();
    }
    if (j.contains("actions") && !j.at("actions").is_null()) {
        a.actions = j.at("actions").get<std::string>();
    }
    return a;
}

inline json to_json(const AnnotatedSample& s) {
    return json{{"sample_id", s.sample_id},
                {"context", to_json(s.context)},
                {"annotation", to_json(s.annotation)},
                {"provenance", provenance_name(s.provenance)}};
}

inline AnnotatedSample sample_from_json(const json& j) {
    AnnotatedSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.context = dialogue_from_json(j.at("context"));
    s.annotation = annotation_from_json(j.at("annotation"));
    s.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    return s;
}

// Score matrix row: {"sample_id": ..., "scores": {judge: int}}
struct ScoreRow {
    std::string sample_id;
    std::map<std::string, int> scores;
};

inline json to_json(const ScoreRow& r) {
    return json{{"sample_id", r.sample_id}, {"scores", r.scores}};
}

inline ScoreRow score_row_from_json(const json& j) {
    ScoreRow r;
    r.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& [judge, score] : j.at("scores").items()) {
        r.scores[judge] = score.get<int>();
    }
    return r;
}

// Ranking row: {"sample_id", "aggregate", "sigma", "rank"}
struct RankedRow {
    std::string sample_id;
    double aggregate = 0.0;
    double sigma = 0.0;
    int rank = 0;
};

inline json to_json(const RankedRow& r) {
    return json{{"sample_id", r.sample_id},
                {"aggregate", r.aggregate},
                {"sigma", r.sigma},
                {"rank", r.rank}};
}

inline RankedRow ranked_row_from_json(const json& j) {
    RankedRow r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.aggregate = j.at("aggregate").get<double>();
    r.sigma = j.at("sigma").get<double>();
    r.rank = j.at("rank").get<int>();
    return r;
}

// Reward batch rows.
struct RolloutRecord {
    std::string sample_id;
    std::string rollout;
    EmotionLabel gold_emotion;
    std::optional<std::string> gold_strategy;
};

inline json to_json(const RolloutRecord& r) {
    json j{{"sample_id", r.sample_id},
           {"rollout", r.rollout},
           {"gold_emotion", r.gold_emotion.name}};
    if (r.gold_strategy) j["gold_strategy"] = *r.gold_strategy;
    return j;
}

inline RolloutRecord rollout_from_json(const json& j) {
    RolloutRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.rollout = j.at("rollout").get<std::string>();
    r.gold_emotion = EmotionLabel(j.at("gold_emotion").get<std::string>());
    if (j.contains("gold_strategy") && !j.at("gold_strategy").is_null()) {
        r.gold_strategy = j.at("gold_strategy").get<std::string>();
    }
    return r;
}

struct RewardRecord {
    std::string sample_id;
    RewardBreakdown breakdown;
};

inline json to_json(const RewardRecord& r) {
    return json{{"sample_id", r.sample_id},
                {"r_format", r.breakdown.r_format},
                {"r_emotion", r.breakdown.r_emotion},
                {"r_strategy", r.breakdown.r_strategy},
                {"total", r.breakdown.total}};
}

// Reject / exclusion records share one shape.
struct RejectRecord {
    std::string id;
    std::string reason;
};

inline json to_json(const RejectRecord& r) {
    return json{{"id", r.id}, {"reason", r.reason}};
}

// ---------------------------------------------------------------------------
// JSON-lines I/O
// ---------------------------------------------------------------------------

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<T> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_view(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        try {
            out.push_back(from_json_fn(j));
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<AnnotatedSample> read_samples(const std::string& path) {
    auto samples = read_jsonl<AnnotatedSample>(path, sample_from_json);
    std::set<std::string> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.sample_id).second) {
            throw IoError(path + ": duplicate sample_id '" + s.sample_id + "'");
        }
    }
    return samples;
}

inline std::vector<DialogueContext> read_dialogues(const std::string& path) {
    return read_jsonl<DialogueContext>(path, dialogue_from_json);
}

inline std::vector<ScoreRow> read_score_rows(const std::string& path) {
    return read_jsonl<ScoreRow>(path, score_row_from_json);
}

inline std::vector<RankedRow> read_ranked_rows(const std::string& path) {
    return read_jsonl<RankedRow>(path, ranked_row_from_json);
}

inline std::vector<RolloutRecord> read_rollouts(const std::string& path) {
    return read_jsonl<RolloutRecord>(path, rollout_from_json);
}

template <typename Range>
void write_jsonl(const std::string& path, const Range& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace csa
