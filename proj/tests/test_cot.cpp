#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "csa/cot.hpp"
#include "csa/hash.hpp"
#include "support/oracles.hpp"

using namespace csa;

static std::string data_path(const std::string& rel) {
    return std::string(CSA_DATA_DIR) + "/" + rel;
}

TEST_CASE("render_annotation emits the tag grammar byte for byte", "[cot]") {
    Annotation a;
    a.summary = "S";
    a.emotion = EmotionLabel("excited");
    a.strategy = "Exploring Actions and Intentions";
    a.actions = "A";
    a.response = "R";
    CHECK(render_annotation(a) ==
          "<Summary> S\n<Emotion> excited\n<Strategy> Exploring Actions and Intentions, A\n"
          "<Response> R");

    a.strategy.reset();
    a.actions.reset();
    const auto stripped = render_annotation(a);
    CHECK(stripped == "<Summary> S\n<Emotion> excited\n<Response> R");
    CHECK(stripped.find("<Strategy>") == std::string::npos);
}

TEST_CASE("parse_annotation inverts render_annotation", "[cot]") {
    const auto& catalog = default_strategy_catalog();
    Annotation a;
    a.summary = "The speaker is excited about a concert.";
    a.emotion = EmotionLabel("excited");
    a.strategy = "Exploring Actions and Intentions";
    a.actions = "ask about the plans, then share the anticipation";
    a.response = "Who are you going to see?";
    CHECK(parse_annotation(render_annotation(a), catalog) == a);
}

TEST_CASE("parse_annotation handles judge-style sloppiness", "[cot]") {
    const auto& catalog = default_strategy_catalog();

    SECTION("whitespace and numeric strategy alias") {
        const auto a = parse_annotation(
            "  <Summary>   s  \n<Emotion> JOYFUL \n<Strategy>  14 , relax first\n"
            "<Response>  r  ",
            catalog);
        CHECK(a.summary == "s");
        CHECK(a.emotion == EmotionLabel("joyful"));
        CHECK(a.strategy == "Providing Suggestions");
        CHECK(a.actions == "relax first");
        CHECK(a.response == "r");
    }
    SECTION("strategy resolved against the catalog") {
        const auto a = parse_annotation(
            "<Summary> s\n<Emotion> joyful\n<Strategy> Providing Suggestions, relax first\n"
            "<Response> r",
            catalog);
        REQUIRE(a.strategy.has_value());
        CHECK(resolve_strategy(*a.strategy, catalog).id == 14);
        CHECK(a.actions == "relax first");
    }
    SECTION("<Context> accepted as summary alias") {
        const auto a = parse_annotation("<Context> s\n<Emotion> joyful\n<Response> r", catalog);
        CHECK(a.summary == "s");
    }
    SECTION("missing tags") {
        CHECK_THROWS_MATCHES(
            parse_annotation("<Summary> s\n<Response> r", catalog), ParseError,
            Catch::Matchers::Predicate<ParseError>(
                [](const ParseError& e) { return e.tag() == "Emotion"; }));
        CHECK_THROWS_AS(parse_annotation("<Emotion> joyful\n<Response> r", catalog), ParseError);
        CHECK_THROWS_AS(parse_annotation("<Summary> s\n<Emotion> joyful", catalog), ParseError);
    }
    SECTION("unknown strategy") {
        CHECK_THROWS_AS(
            parse_annotation("<Summary> s\n<Emotion> joyful\n<Strategy> Empathic Mirroring, x\n"
                             "<Response> r",
                             catalog),
            UnknownStrategy);
    }
    SECTION("strategy line without a comma") {
        CHECK_THROWS_AS(
            parse_annotation(
                "<Summary> s\n<Emotion> joyful\n<Strategy> Others\n<Response> r", catalog),
            ParseError);
    }
    SECTION("duplicate tag") {
        CHECK_THROWS_AS(
            parse_annotation("<Summary> a\n<Summary> b\n<Emotion> joyful\n<Response> r",
                             catalog),
            ParseError);
    }
}

TEST_CASE("multi-line field content round trips", "[cot]") {
    const auto& catalog = default_strategy_catalog();
    Annotation a;
    a.summary = "first line\nsecond line of the summary";
    a.emotion = EmotionLabel("content");
    a.strategy = "Information";
    a.actions = "give the facts,\nthen let them decide";
    a.response = "Here is what I know.";
    CHECK(parse_annotation(render_annotation(a), catalog) == a);
}

TEST_CASE("round trip holds over randomized annotations", "[cot][property]") {
    const auto& catalog = default_strategy_catalog();
    const auto& emotions = default_emotion_set();
    std::mt19937_64 rng(0x5eed0001);
    for (int i = 0; i < 1000; ++i) {
        const auto a = oracles::random_annotation(rng, catalog, emotions);
        INFO("iteration " << i);
        REQUIRE(parse_annotation(render_annotation(a), catalog) == a);
    }
}

TEST_CASE("shipped case-study texts parse to the expected labels", "[cot]") {
    const auto& catalog = default_strategy_catalog();
    struct Expected {
        const char* file;
        const char* emotion;
        const char* strategy;
    };
    const Expected cases[] = {
        {"fixtures/case1.txt", "Excited", "Exploring Actions and Intentions"},
        {"fixtures/case2.txt", "surprised", "Cognitive Reframing"},
        {"fixtures/case3.txt", "Sentimental", "Self-disclosure"},
        {"fixtures/case4.txt", "Apprehensive", "Exploring Thoughts and Cognition"},
        {"fixtures/case5.txt", "Joyful", "Providing Suggestions"},
        {"fixtures/case6.txt", "joyful", "Affirmation and Reassurance"},
    };
    for (const auto& expected : cases) {
        INFO(expected.file);
        const auto a = parse_annotation(read_file(data_path(expected.file)), catalog);
        CHECK(a.emotion == EmotionLabel(expected.emotion));
        REQUIRE(a.strategy.has_value());
        CHECK(*a.strategy == expected.strategy);
        CHECK_FALSE(a.response.empty());
    }
}

TEST_CASE("check_format accepts exactly the envelope", "[cot]") {
    CHECK(check_format("<think>x</think><answer>y</answer>"));
    CHECK(check_format("  <think>x</think>\n  <answer>y</answer>\n"));
    CHECK(check_format("<think>multi\nline</think> <answer>ok then</answer>"));

    CHECK_FALSE(check_format("<answer>y</answer><think>x</think>"));
    CHECK_FALSE(check_format("<think></think><answer>y</answer>"));
    CHECK_FALSE(check_format("<think>x</think><answer></answer>"));
    CHECK_FALSE(check_format("<think>x</think>"));
    CHECK_FALSE(check_format("no tags"));
    CHECK_FALSE(check_format(""));
    CHECK_FALSE(check_format("< think>x</think><answer>y</answer>"));
    CHECK_FALSE(check_format("junk <think>x</think><answer>y</answer>"));
    CHECK_FALSE(check_format("<think>x</think><answer>y</answer> junk"));
    CHECK_FALSE(check_format("<think>x</think> mid <answer>y</answer>"));
    CHECK_FALSE(check_format("<think>a<think>b</think><answer>y</answer>"));
    CHECK_FALSE(check_format("<think>x</think><answer>y</answer><answer>z</answer>"));
    CHECK_FALSE(check_format("<think>x</think><think>w</think><answer>y</answer>"));
}

// Deterministic corpus of mutated envelopes: deletions, reorderings,
// duplications, emptiness, embedded tags, junk around the envelope.
static std::vector<std::string> mutated_envelopes() {
    std::mt19937_64 rng(0x5eed0002);
    std::vector<std::string> corpus;
    const std::vector<std::string> tags{"<think>", "</think>", "<answer>", "</answer>"};
    while (corpus.size() < 200) {
        std::string think = oracles::random_text(rng, 1, 20);
        std::string answer = oracles::random_text(rng, 1, 20);
        std::string text =
            "<think>" + think + "</think>" + (rng() % 2 ? " " : "") + "<answer>" + answer +
            "</answer>";
        switch (rng() % 10) {
            case 0: text = text.substr(tags[rng() % 4].size());  break;  // clip front
            case 1: text.insert(rng() % text.size(), tags[rng() % 4]); break;
            case 2: text = "<answer>" + answer + "</answer><think>" + think + "</think>"; break;
            case 3: text = "<think></think><answer>" + answer + "</answer>"; break;
            case 4: text = "<think>" + think + "</think><answer></answer>"; break;
            case 5: text += tags[rng() % 4]; break;
            case 6: text = oracles::random_text(rng, 1, 4) + text; break;
            case 7: text += oracles::random_text(rng, 1, 4); break;
            case 8: text.erase(text.find('<'), 1); break;
            case 9: break;  // leave valid
        }
        corpus.push_back(std::move(text));
    }
    return corpus;
}

TEST_CASE("check_format agrees with the character-walk oracle", "[cot][property]") {
    for (const auto& text : mutated_envelopes()) {
        INFO(text);
        REQUIRE(check_format(text) == oracles::check_format(text));
    }
}

TEST_CASE("check_format is total over random bytes", "[cot][fuzz]") {
    std::mt19937_64 rng(0x5eed0003);
    for (int i = 0; i < 10000; ++i) {
        std::string bytes;
        const auto len = rng() % 64;
        for (std::uint64_t b = 0; b < len; ++b) {
            bytes.push_back(static_cast<char>(rng() % 256));
        }
        const bool a = check_format(bytes);
        const bool b = check_format(bytes);
        REQUIRE(a == b);  // pure, and it returned
    }
}

TEST_CASE("split_envelope strips tags and attempts the parse", "[cot]") {
    const auto& catalog = default_strategy_catalog();

    const auto plain = split_envelope("<think>t</think><answer>a</answer>", catalog);
    CHECK(plain.think_block == "t");
    CHECK(plain.answer_block == "a");
    CHECK_FALSE(plain.parsed.has_value());

    Annotation a;
    a.summary = "s";
    a.emotion = EmotionLabel("joyful");
    a.strategy = "Others";
    a.actions = "keep it light";
    a.response = "r";
    const auto wrapped = "<think>weighing the options</think><answer>" + render_annotation(a) +
                         "</answer>";
    const auto out = split_envelope(wrapped, catalog);
    REQUIRE(out.parsed.has_value());
    CHECK(*out.parsed == a);

    CHECK_THROWS_AS(split_envelope("no tags", catalog), FormatError);

    for (const auto& text : mutated_envelopes()) {
        if (!check_format(text)) continue;
        const auto blocks = split_envelope(text, catalog);
        for (const char* tag : {"<think>", "</think>", "<answer>", "</answer>"}) {
            CHECK(blocks.think_block.find(tag) == std::string::npos);
            CHECK(blocks.answer_block.find(tag) == std::string::npos);
        }
    }
}
