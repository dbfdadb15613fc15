#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "csa/cot.hpp"
#include "csa/reward.hpp"

using namespace csa;

namespace {

Annotation gold_annotation() {
    Annotation gold;
    gold.summary = "s";
    gold.emotion = EmotionLabel("excited");
    gold.strategy = "Exploring Actions and Intentions";
    gold.actions = "ask about the plans";
    gold.response = "Who are you going to see?";
    return gold;
}

// Builds a rollout whose emotion/strategy correctness is controlled; format
// correctness is controlled by optionally breaking the envelope.
std::string make_rollout(bool format_ok, bool emotion_ok, bool strategy_ok) {
    Annotation predicted = gold_annotation();
    if (!emotion_ok) predicted.emotion = EmotionLabel("angry");
    if (!strategy_ok) predicted.strategy = "Self-disclosure";
    std::string text = "<think>step by step</think><answer>" +
                       render_annotation(predicted) + "</answer>";
    if (!format_ok) text = "<answer>" + text;  // duplicate tag breaks the envelope
    return text;
}

}  // namespace

TEST_CASE("component rewards", "[reward]") {
    const auto& catalog = default_strategy_catalog();

    SECTION("format gate") {
        CHECK(format_reward("<think>t</think><answer>a</answer>") == 1);
        CHECK(format_reward("a</answer><think>t</think>") == 0);
        CHECK(format_reward("") == 0);
    }
    SECTION("emotion match is normalized string equality") {
        CHECK(emotion_reward(EmotionLabel("Excited"), EmotionLabel("excited")) == 1);
        CHECK(emotion_reward(std::nullopt, EmotionLabel("excited")) == 0);
        CHECK(emotion_reward(EmotionLabel("joyful"), EmotionLabel("excited")) == 0);
    }
    SECTION("strategy match resolves through the catalog") {
        CHECK(strategy_reward("Exploring Actions and Intentions",
                              "Exploring Actions and Intentions", catalog) == 1);
        CHECK(strategy_reward("exploring actions and intentions",
                              "Exploring Actions and Intentions", catalog) == 1);
        CHECK(strategy_reward("7", "Exploring Actions and Intentions", catalog) == 1);
        CHECK(strategy_reward(std::nullopt, "Self-disclosure", catalog) == 0);
        CHECK(strategy_reward("Others", "Self-disclosure", catalog) == 0);
        CHECK(strategy_reward("not a strategy", "Self-disclosure", catalog) == 0);
    }
    SECTION("absent gold strategy grants the component by default") {
        CHECK(strategy_reward("anything", std::nullopt, catalog) == 1);
        CHECK(strategy_reward(std::nullopt, std::nullopt, catalog) == 1);
        RewardOptions strict;
        strict.reward_when_gold_strategy_absent = false;
        CHECK(strategy_reward(std::nullopt, std::nullopt, catalog, strict) == 0);
    }
}

TEST_CASE("score_rollout truth table is exact", "[reward]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();

    const int expected_totals[2][2][2] = {{{0, 0}, {0, 0}}, {{1, 2}, {2, 3}}};
    for (int f = 0; f <= 1; ++f) {
        for (int e = 0; e <= 1; ++e) {
            for (int s = 0; s <= 1; ++s) {
                const auto rollout = make_rollout(f == 1, e == 1, s == 1);
                const auto breakdown = score_rollout(rollout, gold, catalog);
                INFO("f=" << f << " e=" << e << " s=" << s);
                CHECK(breakdown.r_format == f);
                CHECK(breakdown.total == expected_totals[f][e][s]);
                CHECK(breakdown.total ==
                      breakdown.r_format * (1 + breakdown.r_emotion + breakdown.r_strategy));
            }
        }
    }
}

TEST_CASE("format failure gates the total to zero", "[reward]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();
    const auto breakdown = score_rollout(make_rollout(false, true, true), gold, catalog);
    CHECK(breakdown.r_format == 0);
    CHECK(breakdown.total == 0);
}

TEST_CASE("parse failure inside a valid envelope yields absent predictions", "[reward]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();

    const auto breakdown =
        score_rollout("<think>t</think><answer>no tags in here</answer>", gold, catalog);
    CHECK(breakdown.r_format == 1);
    CHECK(breakdown.r_emotion == 0);
    CHECK(breakdown.r_strategy == 0);
    CHECK(breakdown.total == 1);

    Annotation stripped_gold = gold;
    stripped_gold.strategy.reset();
    stripped_gold.actions.reset();
    const auto stripped = score_rollout("<think>t</think><answer>no tags in here</answer>",
                                        stripped_gold, catalog);
    CHECK(stripped.r_strategy == 1);  // no gold strategy to miss
    CHECK(stripped.total == 2);
}

TEST_CASE("stripped-gold rollouts can reach the full reward", "[reward]") {
    const auto& catalog = default_strategy_catalog();
    Annotation gold = gold_annotation();
    gold.strategy.reset();
    gold.actions.reset();

    Annotation predicted = gold;
    const auto rollout =
        "<think>reasoning</think><answer>" + render_annotation(predicted) + "</answer>";
    const auto breakdown = score_rollout(rollout, gold, catalog);
    CHECK(breakdown.total == 3);
}

TEST_CASE("rewards are total and bounded over random bytes", "[reward][fuzz]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();
    std::mt19937_64 rng(0x5eed3001);
    for (int i = 0; i < 10000; ++i) {
        std::string bytes;
        const auto len = rng() % 96;
        for (std::uint64_t b = 0; b < len; ++b) bytes.push_back(static_cast<char>(rng() % 256));
        const auto breakdown = score_rollout(bytes, gold, catalog);
        REQUIRE(breakdown.total >= 0);
        REQUIRE(breakdown.total <= 3);
        REQUIRE(breakdown.total ==
                breakdown.r_format * (1 + breakdown.r_emotion + breakdown.r_strategy));
    }
}

TEST_CASE("flipping one component to correct never lowers the total", "[reward][property]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();
    for (int f = 0; f <= 1; ++f) {
        for (int e = 0; e <= 1; ++e) {
            for (int s = 0; s <= 1; ++s) {
                const auto base =
                    score_rollout(make_rollout(f == 1, e == 1, s == 1), gold, catalog).total;
                if (f == 0) {
                    CHECK(base <=
                          score_rollout(make_rollout(true, e == 1, s == 1), gold, catalog).total);
                }
                if (e == 0) {
                    CHECK(base <=
                          score_rollout(make_rollout(f == 1, true, s == 1), gold, catalog).total);
                }
                if (s == 0) {
                    CHECK(base <=
                          score_rollout(make_rollout(f == 1, e == 1, true), gold, catalog).total);
                }
            }
        }
    }
}

TEST_CASE("score_rollout is pure", "[reward]") {
    const auto& catalog = default_strategy_catalog();
    const auto gold = gold_annotation();
    const auto rollout = make_rollout(true, true, false);
    CHECK(score_rollout(rollout, gold, catalog) == score_rollout(rollout, gold, catalog));
}
