#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csa/errors.hpp"

namespace csa {

// ---------------------------------------------------------------------------
// string helpers shared across the toolkit
// ---------------------------------------------------------------------------

inline std::string_view trim_view(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
// This is the normal form used for strategy-name and emotion matching.
inline std::string normalize_key(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // swallow leading whitespace
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            in_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

enum class Role { speaker, listener };

inline std::string_view role_name(Role r) {
    return r == Role::speaker ? "speaker" : "listener";
}

inline Role role_from_name(std::string_view s) {
    auto n = normalize_key(s);
    if (n == "speaker") return Role::speaker;
    if (n == "listener") return Role::listener;
    throw IoError("unknown role: '" + std::string(s) + "'");
}

struct Utterance {
    Role role = Role::speaker;
    std::string text;
    int turn_index = 0;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

// A label from the active emotion set, stored in normal form (lowercase,
// trimmed). Membership is checked where the set is available (validate_sample
// and the importer), not at construction.
struct EmotionLabel {
    std::string name;

    EmotionLabel() = default;
    explicit EmotionLabel(std::string_view raw) : name(normalize_key(raw)) {}

    friend bool operator==(const EmotionLabel&, const EmotionLabel&) = default;
};

struct DialogueContext {
    std::string dialogue_id;
    std::vector<Utterance> utterances;
    std::optional<EmotionLabel> emotion_gold;

    friend bool operator==(const DialogueContext&, const DialogueContext&) = default;
};

enum class Difficulty { I = 1, II = 2, III = 3 };

inline std::string_view difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::I: return "I";
        case Difficulty::II: return "II";
        case Difficulty::III: return "III";
    }
    return "I";
}

inline Difficulty difficulty_from_name(std::string_view s) {
    auto t = trim(s);
    if (t == "I") return Difficulty::I;
    if (t == "II") return Difficulty::II;
    if (t == "III") return Difficulty::III;
    throw CatalogError("unknown difficulty tier: '" + t + "' (expected I, II or III)");
}

struct StrategyDef {
    int id = 0;
    std::string name;
    std::string definition;
    Difficulty difficulty = Difficulty::I;

    friend bool operator==(const StrategyDef&, const StrategyDef&) = default;
};

constexpr int kStrategyCount = 14;

class StrategyCatalog {
  public:
    StrategyCatalog(std::vector<StrategyDef> strategies,
                    std::map<Difficulty, double> difficulty_weights)
        : strategies_(std::move(strategies)), weights_(std::move(difficulty_weights)) {
        validate();
        for (const auto& s : strategies_) {
            by_name_[normalize_key(s.name)] = s.id;
        }
    }

    const std::vector<StrategyDef>& strategies() const noexcept { return strategies_; }
    const std::map<Difficulty, double>& difficulty_weights() const noexcept { return weights_; }

    const StrategyDef& by_id(int id) const {
        if (id < 1 || id > static_cast<int>(strategies_.size())) {
            throw UnknownStrategy(std::to_string(id));
        }
        return strategies_[static_cast<std::size_t>(id - 1)];
    }

    const StrategyDef* find(std::string_view name) const {
        auto key = normalize_key(name);
        auto it = by_name_.find(key);
        if (it != by_name_.end()) return &by_id(it->second);
        // numeric id alias
        if (!key.empty() && key.size() <= 4 &&
            key.find_first_not_of("0123456789") == std::string::npos) {
            int id = 0;
            for (char c : key) id = id * 10 + (c - '0');
            if (id >= 1 && id <= static_cast<int>(strategies_.size())) return &by_id(id);
        }
        return nullptr;
    }

    double difficulty_weight(std::string_view name) const;

    friend bool operator==(const StrategyCatalog& a, const StrategyCatalog& b) {
        return a.strategies_ == b.strategies_ && a.weights_ == b.weights_;
    }

  private:
    void validate() const {
        if (strategies_.size() != kStrategyCount) {
            throw CatalogError("catalog must contain exactly " +
                               std::to_string(kStrategyCount) + " strategies, got " +
                               std::to_string(strategies_.size()));
        }
        std::set<std::string> names;
        std::set<Difficulty> tiers;
        for (std::size_t i = 0; i < strategies_.size(); ++i) {
            const auto& s = strategies_[i];
            if (s.id != static_cast<int>(i) + 1) {
                throw CatalogError("strategy ids must be contiguous 1.." +
                                   std::to_string(kStrategyCount) + "; found id " +
                                   std::to_string(s.id) + " at position " +
                                   std::to_string(i + 1));
            }
            if (trim(s.name).empty()) {
                throw CatalogError("strategy " + std::to_string(s.id) + " has an empty name");
            }
            if (!names.insert(normalize_key(s.name)).second) {
                throw CatalogError("duplicate strategy name: '" + s.name + "'");
            }
            tiers.insert(s.difficulty);
        }
        for (auto tier : {Difficulty::I, Difficulty::II, Difficulty::III}) {
            if (!tiers.contains(tier)) {
                throw CatalogError("difficulty tier " + std::string(difficulty_name(tier)) +
                                   " is not represented in the catalog");
            }
            auto it = weights_.find(tier);
            if (it == weights_.end()) {
                throw CatalogError("missing difficulty weight for tier " +
                                   std::string(difficulty_name(tier)));
            }
            if (!(it->second > 0.0)) {
                throw CatalogError("difficulty weight for tier " +
                                   std::string(difficulty_name(tier)) +
                                   " must be positive");
            }
        }
        if (!(weights_.at(Difficulty::I) < weights_.at(Difficulty::II) &&
              weights_.at(Difficulty::II) < weights_.at(Difficulty::III))) {
            throw CatalogError("difficulty weights must be strictly increasing across tiers");
        }
    }

    std::vector<StrategyDef> strategies_;
    std::map<Difficulty, double> weights_;
    std::map<std::string, int> by_name_;
};

struct Annotation {
    std::string summary;
    EmotionLabel emotion;
    std::optional<std::string> strategy;
    std::optional<std::string> actions;
    std::string response;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

enum class Provenance { gold, llm_annotated, synthetic };

inline std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::gold: return "gold";
        case Provenance::llm_annotated: return "llm_annotated";
        case Provenance::synthetic: return "synthetic";
    }
    return "gold";
}

inline Provenance provenance_from_name(std::string_view s) {
    auto n = normalize_key(s);
    if (n == "gold") return Provenance::gold;
    if (n == "llm_annotated") return Provenance::llm_annotated;
    if (n == "synthetic") return Provenance::synthetic;
    throw IoError("unknown provenance: '" + std::string(s) + "'");
}

struct AnnotatedSample {
    std::string sample_id;
    DialogueContext context;
    Annotation annotation;
    Provenance provenance = Provenance::gold;

    friend bool operator==(const AnnotatedSample&, const AnnotatedSample&) = default;
};

// The active emotion label set; lookups use the same normal form labels are
// stored in.
class EmotionSet {
  public:
    EmotionSet() = default;
    explicit EmotionSet(std::vector<std::string> labels) {
        for (auto& l : labels) {
            auto key = normalize_key(l);
            if (key.empty()) continue;
            if (labels_.insert(key).second) ordered_.push_back(key);
        }
    }

    bool contains(const EmotionLabel& label) const { return labels_.contains(label.name); }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return ordered_; }

  private:
    std::set<std::string> labels_;
    std::vector<std::string> ordered_;
};

// ---------------------------------------------------------------------------
// catalog / emotion-set file handling
// ---------------------------------------------------------------------------

inline const std::map<Difficulty, double>& default_difficulty_weights() {
    static const std::map<Difficulty, double> weights{
        {Difficulty::I, 1.0}, {Difficulty::II, 2.0}, {Difficulty::III, 3.0}};
    return weights;
}

// Catalog file: one strategy per line, tab-separated:
//   id <TAB> name <TAB> difficulty (I|II|III) <TAB> definition
inline StrategyCatalog load_strategy_catalog(
    std::string_view source,
    const std::map<Difficulty, double>& weights = default_difficulty_weights()) {
    std::vector<StrategyDef> defs;
    int line_no = 0;
    for (const auto& raw_line : split(source, '\n')) {
        ++line_no;
        std::string_view line = raw_line;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim_view(line).empty() || trim_view(line).front() == '#') continue;
        auto fields = split(line, '\t');
        if (fields.size() != 4) {
            throw CatalogError("catalog line " + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
        }
        StrategyDef def;
        try {
            def.id = std::stoi(trim(fields[0]));
        } catch (const std::exception&) {
            throw CatalogError("catalog line " + std::to_string(line_no) + ": bad id '" + fields[0] + "'");
        }
        def.name = trim(fields[1]);
        def.difficulty = difficulty_from_name(fields[2]);
        def.definition = trim(fields[3]);
        defs.push_back(std::move(def));
    }
    std::sort(defs.begin(), defs.end(),
              [](const StrategyDef& a, const StrategyDef& b) { return a.id < b.id; });
    for (std::size_t i = 0; i + 1 < defs.size(); ++i) {
        if (defs[i].id == defs[i + 1].id) {
            throw CatalogError("duplicate strategy id: " + std::to_string(defs[i].id));
        }
    }
    return StrategyCatalog(std::move(defs), weights);
}

inline std::string serialize_strategy_catalog(const StrategyCatalog& catalog) {
    std::ostringstream out;
    for (const auto& s : catalog.strategies()) {
        out << s.id << '\t' << s.name << '\t' << difficulty_name(s.difficulty) << '\t'
            << s.definition << '\n';
    }
    return out.str();
}

// The built-in catalog: 14 strategies across three difficulty tiers.
inline std::string_view builtin_catalog_tsv() {
    static const std::string tsv =
        "1\tGratitude Prompting\tI\tEncourages the speaker to notice and reflect on positive experiences or supportive aspects of their life, fostering positive emotional awareness.\n"
        "2\tRestatement or Paraphrasing\tI\tRephrases the speaker's main ideas to demonstrate understanding and attentive listening.\n"
        "3\tOthers\tI\tCovers responses that do not clearly fit into any predefined strategy category.\n"
        "4\tInformation\tI\tProvides objective facts or relevant knowledge to help the speaker better understand their situation or make decisions.\n"
        "5\tNeutral Validation\tII\tAffirms that neutral or low-intensity emotional states are normal and acceptable without encouraging stronger emotions.\n"
        "6\tPositive Reinforcement\tII\tHighlights the speaker's strengths, efforts, or constructive behaviors to reinforce confidence and motivation.\n"
        "7\tExploring Actions and Intentions\tII\tUses targeted questions to clarify the speaker's actions, plans, and underlying intentions.\n"
        "8\tSelf-disclosure\tII\tShares limited, relevant personal information to foster rapport and mutual understanding.\n"
        "9\tAffirmation and Reassurance\tII\tAcknowledges the speaker's feelings and offers comfort or emotional support.\n"
        "10\tReflection of Feelings\tIII\tIdentifies and articulates emotions that the speaker implies but does not explicitly express.\n"
        "11\tCognitive Reframing\tIII\tOffers an alternative perspective on a difficult situation while respecting the speaker's original emotions.\n"
        "12\tExploring Feelings and Emotions\tIII\tUses open-ended prompts to encourage deeper expression of the speaker's emotional experience.\n"
        "13\tExploring Thoughts and Cognition\tIII\tProbes the speaker's beliefs, interpretations, and thought processes.\n"
        "14\tProviding Suggestions\tIII\tOffers practical and actionable recommendations tailored to the speaker's needs.\n";
    return tsv;
}

inline const StrategyCatalog& default_strategy_catalog() {
    static const StrategyCatalog catalog = load_strategy_catalog(builtin_catalog_tsv());
    return catalog;
}

inline double StrategyCatalog::difficulty_weight(std::string_view name) const {
    const StrategyDef* def = find(name);
    if (def == nullptr) throw UnknownStrategy(name);
    return weights_.at(def->difficulty);
}

// Emotion set file: one label per line; blank lines and # comments skipped.
inline EmotionSet load_emotion_set(std::string_view source) {
    std::vector<std::string> labels;
    for (const auto& line : split(source, '\n')) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        labels.push_back(t);
    }
    return EmotionSet(std::move(labels));
}

inline std::string_view builtin_emotion_labels() {
    static const std::string labels =
        "surprised\nexcited\nangry\nproud\nsad\nannoyed\ngrateful\nlonely\nafraid\n"
        "terrified\nguilty\nimpressed\ndisgusted\nhopeful\nconfident\nfurious\nanxious\n"
        "anticipating\njoyful\nnostalgic\ndisappointed\nprepared\njealous\ncontent\n"
        "devastated\nembarrassed\ncaring\nsentimental\ntrusting\nashamed\napprehensive\n"
        "faithful\n";
    return labels;
}

inline const EmotionSet& default_emotion_set() {
    static const EmotionSet set = load_emotion_set(builtin_emotion_labels());
    return set;
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

inline const StrategyDef& resolve_strategy(std::string_view name, const StrategyCatalog& catalog) {
    const StrategyDef* def = catalog.find(name);
    if (def == nullptr) throw UnknownStrategy(name);
    return *def;
}

// Returns the list of violated invariants; empty means valid. Violations are
// data, not errors: a malformed sample is something to report on, not to
// throw over.
inline std::vector<std::string> validate_sample(const AnnotatedSample& sample,
                                                const StrategyCatalog& catalog,
                                                const EmotionSet& emotions) {
    std::vector<std::string> violations;
    if (trim_view(sample.sample_id).empty()) {
        violations.emplace_back("empty sample_id");
    }
    if (sample.context.utterances.empty()) {
        violations.emplace_back("no utterances");
    }
    int expected_start = 0;
    int prev = -1;
    for (std::size_t i = 0; i < sample.context.utterances.size(); ++i) {
        const auto& u = sample.context.utterances[i];
        if (trim_view(u.text).empty()) {
            violations.push_back("empty utterance text at position " + std::to_string(i));
        }
        if (i == 0 && u.turn_index != expected_start) {
            violations.emplace_back("turn_index does not start at 0");
        }
        if (i > 0 && u.turn_index <= prev) {
            violations.emplace_back("turn_index not strictly increasing");
        }
        prev = u.turn_index;
    }
    if (sample.context.emotion_gold && !emotions.contains(*sample.context.emotion_gold)) {
        violations.push_back("gold emotion not in label set: '" +
                             sample.context.emotion_gold->name + "'");
    }
    const auto& ann = sample.annotation;
    if (trim_view(ann.response).empty()) {
        violations.emplace_back("empty response");
    }
    if (ann.strategy.has_value() != ann.actions.has_value()) {
        violations.emplace_back("strategy/actions pairing");
    }
    if (ann.strategy && catalog.find(*ann.strategy) == nullptr) {
        violations.push_back("unknown strategy: '" + *ann.strategy + "'");
    }
    if (!emotions.contains(ann.emotion)) {
        violations.push_back("emotion not in label set: '" + ann.emotion.name + "'");
    }
    return violations;
}

}  // namespace csa
