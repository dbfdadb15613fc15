#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "csa/cot.hpp"
#include "csa/strategy.hpp"

namespace csa {

// R = r_format * (1 + r_emotion + r_strategy). Component fields are kept even
// when the format gate zeroes the total, so telemetry can tell bad format from
// bad content.
struct RewardBreakdown {
    int r_format = 0;
    int r_emotion = 0;
    int r_strategy = 0;
    int total = 0;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

struct RewardOptions {
    // Grant the strategy component when the gold record carries no strategy
    // (strategy-stripped samples); when false such samples top out at 2.
    bool reward_when_gold_strategy_absent = true;
};

inline int format_reward(std::string_view rollout) { return check_format(rollout) ? 1 : 0; }

inline int emotion_reward(const std::optional<EmotionLabel>& predicted,
                          const EmotionLabel& gold) {
    return (predicted && predicted->name == gold.name) ? 1 : 0;
}

inline int strategy_reward(const std::optional<std::string>& predicted,
                           const std::optional<std::string>& gold,
                           const StrategyCatalog& catalog, const RewardOptions& options = {}) {
    if (!gold) {
        return options.reward_when_gold_strategy_absent ? 1 : 0;
    }
    if (!predicted) return 0;
    const StrategyDef* predicted_def = catalog.find(*predicted);
    const StrategyDef* gold_def = catalog.find(*gold);
    if (predicted_def == nullptr || gold_def == nullptr) return 0;
    return predicted_def->id == gold_def->id ? 1 : 0;
}

// Total over every byte string: malformed rollouts score 0, never throw.
inline RewardBreakdown score_rollout(std::string_view rollout, const Annotation& gold,
                                     const StrategyCatalog& catalog,
                                     const RewardOptions& options = {}) {
    RewardBreakdown out;
    out.r_format = format_reward(rollout);

    std::optional<Annotation> predicted;
    if (out.r_format == 1) {
        StructuredOutput envelope = split_envelope(rollout, catalog);
        predicted = envelope.parsed;  // absent on parse failure
    }
    std::optional<EmotionLabel> predicted_emotion;
    std::optional<std::string> predicted_strategy;
    if (predicted) {
        predicted_emotion = predicted->emotion;
        predicted_strategy = predicted->strategy;
    }
    out.r_emotion = emotion_reward(predicted_emotion, gold.emotion);
    out.r_strategy = strategy_reward(predicted_strategy, gold.strategy, catalog, options);
    out.total = out.r_format * (1 + out.r_emotion + out.r_strategy);
    return out;
}

}  // namespace csa
