#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "csa/importer.hpp"
#include "csa/judge.hpp"
#include "csa/synth.hpp"

using namespace csa;

namespace {

DialogueContext concert_dialogue() {
    DialogueContext d;
    d.dialogue_id = "d-1";
    d.utterances = {Utterance{Role::speaker, "I am going to a concert very soon.", 0},
                    Utterance{Role::listener, "That's awesome! Who are you going to see?", 1}};
    d.emotion_gold = EmotionLabel("excited");
    return d;
}

JudgeOptions fast_options() {
    JudgeOptions options;
    options.retry.max_retries = 0;
    options.retry.timeout_seconds = 2.0;
    options.retry.backoff_base_ms = 1;
    options.concurrency = 2;
    return options;
}

}  // namespace

TEST_CASE("annotation prompt carries everything the judge needs", "[judge]") {
    const auto& catalog = default_strategy_catalog();
    auto dialogue = concert_dialogue();
    const auto reply = dialogue.utterances.back().text;
    dialogue.utterances.pop_back();

    const auto prompt =
        build_annotation_prompt(dialogue, *dialogue.emotion_gold, reply, catalog);
    CHECK(prompt.find("choose one strategy from the optional strategies") != std::string::npos);
    CHECK(prompt.find("Speaker: I am going to a concert very soon.") != std::string::npos);
    CHECK(prompt.find("2. Emotion: excited") != std::string::npos);
    CHECK(prompt.find("3. Listener's Response: That's awesome!") != std::string::npos);
    CHECK(prompt.find("<Strategy> [one strategy], [reason and actions]") != std::string::npos);

    int numbered = 0;
    for (const auto& def : catalog.strategies()) {
        const auto line = std::to_string(def.id) + "." + def.name + ": " + def.definition;
        if (prompt.find(line) != std::string::npos) ++numbered;
    }
    CHECK(numbered == 14);

    SECTION("deterministic") {
        CHECK(prompt == build_annotation_prompt(dialogue, *dialogue.emotion_gold, reply, catalog));
    }
    SECTION("empty context") {
        DialogueContext empty;
        empty.dialogue_id = "d-0";
        CHECK_THROWS_AS(build_annotation_prompt(empty, EmotionLabel("excited"), "hi", catalog),
                        PromptError);
    }
    SECTION("missing gold emotion on the sample overload") {
        AnnotatedSample sample;
        sample.sample_id = "x";
        sample.context = dialogue;
        sample.context.emotion_gold.reset();
        sample.annotation.response = reply;
        CHECK_THROWS_AS(build_annotation_prompt(sample, catalog), PromptError);
    }
}

TEST_CASE("scoring prompt ends with the bare-integer instruction", "[judge]") {
    const auto dialogue = concert_dialogue();
    const auto prompt = build_scoring_prompt(dialogue, "target reply", "reasoning text");
    CHECK(prompt.find("target reply") != std::string::npos);
    CHECK(prompt.find("reasoning text") != std::string::npos);
    CHECK(prompt.find("score from 1 to 5") != std::string::npos);
    const std::string tail = "without any explanation, extra text, punctuation, or formatting.";
    REQUIRE(prompt.size() >= tail.size());
    CHECK(prompt.substr(prompt.size() - tail.size()) == tail);

    SECTION("empty reasoning is still a valid prompt") {
        CHECK_FALSE(build_scoring_prompt(dialogue, "reply", "").empty());
    }
    SECTION("deterministic") {
        CHECK(prompt == build_scoring_prompt(dialogue, "target reply", "reasoning text"));
    }
}

TEST_CASE("extract_integer_score is strict", "[judge]") {
    CHECK(extract_integer_score(" 4\n") == 4);
    CHECK(extract_integer_score("1") == 1);
    CHECK(extract_integer_score("5") == 5);
    CHECK_THROWS_AS(extract_integer_score("Score: 4"), ScoreParseError);
    CHECK_THROWS_AS(extract_integer_score("4.0"), ScoreParseError);
    CHECK_THROWS_AS(extract_integer_score("four"), ScoreParseError);
    CHECK_THROWS_AS(extract_integer_score(""), ScoreParseError);
    CHECK_THROWS_AS(extract_integer_score("6"), ScoreRangeError);
    CHECK_THROWS_AS(extract_integer_score("0"), ScoreRangeError);
    CHECK_THROWS_AS(extract_integer_score("-3"), ScoreRangeError);
}

TEST_CASE("mock judges are pure functions of seed and prompt", "[judge]") {
    const JudgeId mock{"m", "mock:42"};
    const auto options = fast_options();
    const auto a = request_completion(mock, "any prompt", options);
    const auto b = request_completion(mock, "any prompt", options);
    CHECK(a == b);
    CHECK(a != request_completion(mock, "another prompt", options));
    CHECK(a != request_completion(JudgeId{"m", "mock:43"}, "any prompt", options));

    SECTION("scorer profiles emit bare integers") {
        const JudgeId scorer{"s", "mock:11:integer-scorer"};
        const JudgeId reversed{"r", "mock:11:reversed-scorer"};
        for (const auto* prompt : {"p1", "p2", "p3", "p4", "p5"}) {
            const int s = extract_integer_score(request_completion(scorer, prompt, options));
            const int r = extract_integer_score(request_completion(reversed, prompt, options));
            CHECK(s + r == 6);
        }
    }
    SECTION("bad mock endpoints are config errors") {
        CHECK_THROWS_AS(request_completion(JudgeId{"m", "mock:abc"}, "p", options), ConfigError);
        CHECK_THROWS_AS(request_completion(JudgeId{"m", "mock:1:weird"}, "p", options),
                        ConfigError);
    }
}

TEST_CASE("unreachable endpoint with zero retries raises TransportError", "[judge]") {
    const JudgeId judge{"offline", "http://127.0.0.1:9/v1/chat/completions"};
    auto options = fast_options();
    options.retry.timeout_seconds = 0.25;
    CHECK_THROWS_AS(request_completion(judge, "hello", options), TransportError);
}

TEST_CASE("transient 429 is retried, success follows", "[judge][http]") {
    std::atomic<int> hits{0};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        REQUIRE(body.at("messages").at(0).at("content").get<std::string>() == "ping");
        if (hits.fetch_add(1) == 0) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        const json reply{{"choices", json::array({json{
                             {"message", json{{"role", "assistant"}, {"content", "4"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    JudgeId judge{"stub", "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"};
    auto options = fast_options();
    options.retry.max_retries = 2;

    CHECK(request_completion(judge, "ping", options) == "4");
    CHECK(hits.load() == 2);

    SECTION("non-retryable status surfaces as JudgeHttpError") {
        server.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
            res.status = 404;
        });
        JudgeId bad{"stub", "http://127.0.0.1:" + std::to_string(port) + "/bad"};
        CHECK_THROWS_AS(request_completion(bad, "ping", options), JudgeHttpError);
    }

    server.stop();
    runner.join();
}

TEST_CASE("annotate_dataset produces samples and rejects deterministically", "[judge]") {
    const auto& catalog = default_strategy_catalog();
    const auto options = fast_options();

    const auto csv = make_synthetic_corpus_csv(12, 5);
    const auto imported = import_ed_csv(csv, default_emotion_set());
    REQUIRE(imported.dialogues.size() == 12);
    REQUIRE(imported.rejects.empty());

    SECTION("valid annotator annotates everything") {
        const JudgeId annotator{"annotator", "mock:7:valid-annotator"};
        const auto result = annotate_dataset(imported.dialogues, annotator, catalog, options);
        CHECK(result.samples.size() == 12);
        CHECK(result.rejects.empty());
        CHECK(result.request_count == 12);
        for (const auto& sample : result.samples) {
            CHECK(sample.provenance == Provenance::llm_annotated);
            CHECK(sample.context.utterances.back().role == Role::speaker);
            CHECK(validate_sample(sample, catalog, default_emotion_set()).empty());
        }

        const auto again = annotate_dataset(imported.dialogues, annotator, catalog, options);
        CHECK(again.samples == result.samples);
    }
    SECTION("noisy annotator yields rejects, never drops") {
        const JudgeId noisy{"annotator", "mock:9:noisy-annotator"};
        const auto result = annotate_dataset(imported.dialogues, noisy, catalog, options);
        CHECK(result.samples.size() + result.rejects.size() == 12);
        CHECK_FALSE(result.rejects.empty());
    }
    SECTION("dialogue without a final listener reply is rejected") {
        auto dialogues = imported.dialogues;
        dialogues[0].utterances.pop_back();
        const JudgeId annotator{"annotator", "mock:7:valid-annotator"};
        const auto result = annotate_dataset(dialogues, annotator, catalog, options);
        CHECK(result.rejects.size() >= 1);
        CHECK(result.rejects[0].id == dialogues[0].dialogue_id);
    }
}

TEST_CASE("score_dataset_with_panel fills a complete matrix", "[judge]") {
    const auto& catalog = default_strategy_catalog();
    const auto options = fast_options();
    const auto pool = make_synthetic_pool(5, 3, catalog);

    const std::vector<JudgeId> panel{{"judge-a", "mock:11:integer-scorer"},
                                     {"judge-b", "mock:12:integer-scorer"},
                                     {"judge-c", "mock:13:integer-scorer"}};

    const auto result = score_dataset_with_panel(pool, panel, options);
    CHECK(result.matrix.sample_count() == 5);
    CHECK(result.matrix.judge_count() == 3);
    CHECK(result.exclusions.empty());
    for (const auto& [judge, scores] : result.matrix.scores_by_judge) {
        REQUIRE(scores.size() == 5);
        for (double s : scores) {
            CHECK(s >= 1.0);
            CHECK(s <= 5.0);
        }
    }

    SECTION("panel of one is rejected") {
        CHECK_THROWS_AS(score_dataset_with_panel(pool, {panel[0]}, options), PanelError);
    }
    SECTION("a failing judge excludes samples listwise") {
        auto with_bad = panel;
        with_bad.push_back(JudgeId{"judge-x", "mock:14:valid-annotator"});  // emits tag text
        const auto excluded = score_dataset_with_panel(pool, with_bad, options);
        CHECK(excluded.matrix.sample_count() == 0);
        CHECK(excluded.exclusions.size() == 5);
        // one re-ask per failing cell
        CHECK(excluded.request_count == 5 * 3 + 5 * 2);
    }
    SECTION("duplicate judge names are rejected") {
        CHECK_THROWS_AS(
            score_dataset_with_panel(pool, {panel[0], panel[0]}, options), PanelError);
    }
}
