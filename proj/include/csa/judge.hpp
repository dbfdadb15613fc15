#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "csa/cot.hpp"
#include "csa/errors.hpp"
#include "csa/hash.hpp"
#include "csa/jsonl.hpp"
#include "csa/scoring.hpp"
#include "csa/strategy.hpp"

namespace csa {

struct JudgeId {
    std::string name;
    // Either an HTTP(S) chat-completions URL or "mock:<seed>[:profile]" with
    // profile one of valid-annotator (default), noisy-annotator,
    // integer-scorer, reversed-scorer.
    std::string endpoint;
};

struct JudgeScore {
    std::string judge;
    std::string sample_id;
    int score = 0;
};

struct RetryPolicy {
    int max_retries = 2;
    double timeout_seconds = 30.0;
    int backoff_base_ms = 250;
};

struct JudgeOptions {
    std::string model = "default";
    double temperature = 0.0;
    std::string api_key_env;  // name of the env var holding the bearer token
    RetryPolicy retry;
    int concurrency = 4;  // per-endpoint in-flight cap
};

// ---------------------------------------------------------------------------
// prompt construction
// ---------------------------------------------------------------------------

inline std::string render_transcript(const DialogueContext& context) {
    std::string out;
    for (const auto& u : context.utterances) {
        out += u.role == Role::speaker ? "Speaker: " : "Listener: ";
        out += u.text;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

// Annotation prompt over an explicit (context, emotion, reply) triple. The
// context must not include the reply being annotated.
inline std::string build_annotation_prompt(const DialogueContext& context,
                                           const EmotionLabel& emotion,
                                           std::string_view listener_reply,
                                           const StrategyCatalog& catalog) {
    if (context.utterances.empty()) {
        throw PromptError("annotation prompt requires a non-empty dialogue context");
    }
    if (trim_view(listener_reply).empty()) {
        throw PromptError("annotation prompt requires the listener's response");
    }
    if (trim_view(emotion.name).empty()) {
        throw PromptError("annotation prompt requires a gold emotion");
    }
    std::ostringstream out;
    out << "Role: You are an expert in empathetic dialogue and strategy analysis.\n"
        << "Inputs:\n"
        << "1. Context:\n"
        << render_transcript(context) << '\n'
        << "2. Emotion: " << emotion.name << '\n'
        << "3. Listener's Response: " << listener_reply << '\n'
        << "Task: This is an empathetic conversation, please read the context and focus on "
           "the listener's last reply. Now, suppose you are the listener mentioned above - "
           "please complete the following tasks:\n"
        << "<Summary> Briefly summarize the speaker's situation.\n"
        << "<Strategy> From the first-person perspective, choose one strategy from the "
           "optional strategies and their interpretations below and explain how you would "
           "apply it, keeping the reasoning concise.\n"
        << "Optional strategies:\n";
    for (const auto& s : catalog.strategies()) {
        out << s.id << '.' << s.name << ": " << s.definition << '\n';
    }
    out << "Output Format:\n"
        << "<Summary> ...\n"
        << "<Emotion> ...\n"
        << "<Strategy> [one strategy], [reason and actions]\n"
        << "<Response> ...\n"
        << "Output Requirement:\n"
        << "1. Focus on the speaker's last utterance for the need.\n"
        << "2. Pick only strategies actually used in the listener's response.\n"
        << "3. Be concise and precise.";
    return out.str();
}

// Convenience overload: the sample supplies context, gold emotion and the
// final listener response.
inline std::string build_annotation_prompt(const AnnotatedSample& sample,
                                           const StrategyCatalog& catalog) {
    if (!sample.context.emotion_gold) {
        throw PromptError("sample '" + sample.sample_id + "' has no gold emotion");
    }
    return build_annotation_prompt(sample.context, *sample.context.emotion_gold,
                                   sample.annotation.response, catalog);
}

inline std::string build_scoring_prompt(const DialogueContext& context,
                                        std::string_view target_reply,
                                        std::string_view reasoning) {
    std::ostringstream out;
    out << "Role: You are an evaluator.\n"
        << "Inputs:\n"
        << "1. The dialogue context:\n"
        << render_transcript(context) << '\n'
        << "2. The target reply: " << target_reply << '\n'
        << "3. The generated reasoning process:\n"
        << reasoning << '\n'
        << "Task: Your task is to assess whether the reasoning process is reasonable and "
           "accurate in supporting the target reply, given the dialogue. Please output a "
           "single integer score from 1 to 5 (1 = very poor, 5 = excellent).\n"
        << "Output Requirement: Output only the integer score (1-5), without any "
           "explanation, extra text, punctuation, or formatting.";
    return out.str();
}

// ---------------------------------------------------------------------------
// score extraction
// ---------------------------------------------------------------------------

// Strict bare-integer extraction. Anything beyond surrounding whitespace is a
// parse failure; digit scavenging would launder judge noncompliance into data.
inline int extract_integer_score(std::string_view raw) {
    auto t = trim_view(raw);
    if (t.empty()) throw ScoreParseError("empty completion");
    std::size_t pos = 0;
    bool negative = false;
    if (t[pos] == '-' || t[pos] == '+') {
        negative = t[pos] == '-';
        ++pos;
    }
    if (pos == t.size() || t.size() - pos > 9) {
        throw ScoreParseError("not a bare integer: '" + std::string(t) + "'");
    }
    long value = 0;
    for (; pos < t.size(); ++pos) {
        if (t[pos] < '0' || t[pos] > '9') {
            throw ScoreParseError("not a bare integer: '" + std::string(t) + "'");
        }
        value = value * 10 + (t[pos] - '0');
    }
    if (negative) value = -value;
    if (value < 1 || value > 5) {
        throw ScoreRangeError("score " + std::to_string(value) + " outside [1,5]");
    }
    return static_cast<int>(value);
}

// ---------------------------------------------------------------------------
// mock judges
// ---------------------------------------------------------------------------

namespace detail {

struct MockSpec {
    std::uint64_t seed = 0;
    std::string profile = "valid-annotator";
};

inline bool is_mock_endpoint(std::string_view endpoint) {
    return endpoint.substr(0, 5) == "mock:";
}

inline MockSpec parse_mock_endpoint(std::string_view endpoint) {
    auto rest = endpoint.substr(5);
    auto parts = split(rest, ':');
    if (parts.empty() || parts[0].empty() ||
        parts[0].find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("bad mock endpoint '" + std::string(endpoint) +
                          "'; expected mock:<seed>[:profile]");
    }
    MockSpec spec;
    spec.seed = std::strtoull(parts[0].c_str(), nullptr, 10);
    if (parts.size() > 1 && !parts[1].empty()) spec.profile = parts[1];
    if (parts.size() > 2) {
        throw ConfigError("bad mock endpoint '" + std::string(endpoint) + "'");
    }
    static const std::vector<std::string> known{"valid-annotator", "noisy-annotator",
                                                "integer-scorer", "reversed-scorer"};
    if (std::find(known.begin(), known.end(), spec.profile) == known.end()) {
        throw ConfigError("unknown mock profile '" + spec.profile + "'");
    }
    return spec;
}

inline std::string extract_prompt_line(std::string_view prompt, std::string_view marker) {
    auto pos = prompt.find(marker);
    if (pos == std::string_view::npos) return {};
    auto start = pos + marker.size();
    auto end = prompt.find('\n', start);
    if (end == std::string_view::npos) end = prompt.size();
    return trim(prompt.substr(start, end - start));
}

inline std::vector<std::string> extract_prompt_strategies(std::string_view prompt) {
    std::vector<std::string> names;
    auto begin = prompt.find("Optional strategies:\n");
    if (begin == std::string_view::npos) return names;
    auto end = prompt.find("Output Format:", begin);
    auto body = prompt.substr(begin, (end == std::string_view::npos ? prompt.size() : end) - begin);
    for (const auto& line : split(body, '\n')) {
        auto dot = line.find('.');
        auto colon = line.find(':', dot == std::string::npos ? 0 : dot);
        if (dot == std::string::npos || colon == std::string::npos || colon < dot) continue;
        if (line.substr(0, dot).find_first_not_of("0123456789") != std::string::npos) continue;
        auto name = trim(line.substr(dot + 1, colon - dot - 1));
        if (!name.empty()) names.push_back(name);
    }
    return names;
}

// Base score shared by every scorer profile (seed-independent) plus a small
// per-judge perturbation, so distinct-seed panels disagree mildly instead of
// randomly.
inline int mock_base_score(std::string_view prompt) {
    return 1 + static_cast<int>(mix64(fnv1a64(prompt)) % 5);
}

inline int mock_integer_score(std::uint64_t seed, std::string_view prompt) {
    const int base = mock_base_score(prompt);
    const auto noise_bits = mix64(fnv1a64(prompt, mix64(seed ^ 0x5eedf00dULL)));
    const int delta = static_cast<int>(noise_bits % 3) - 1;
    return std::clamp(base + delta, 1, 5);
}

inline std::string mock_completion(const MockSpec& spec, std::string_view prompt) {
    const std::uint64_t h = mix64(fnv1a64(prompt, mix64(spec.seed)));

    if (spec.profile == "integer-scorer") {
        return std::to_string(mock_integer_score(spec.seed, prompt));
    }
    if (spec.profile == "reversed-scorer") {
        return std::to_string(6 - mock_integer_score(spec.seed, prompt));
    }

    // annotator profiles
    if (spec.profile == "noisy-annotator" && h % 4 == 0) {
        return "The best strategy here is obvious, no tags needed.";
    }
    auto emotion = extract_prompt_line(prompt, "2. Emotion: ");
    auto reply = extract_prompt_line(prompt, "3. Listener's Response: ");
    auto strategies = extract_prompt_strategies(prompt);
    if (emotion.empty()) emotion = "neutral";
    if (reply.empty()) reply = "I hear you.";

    std::string strategy = "Others";
    if (!strategies.empty()) {
        strategy = strategies[mix64(h ^ 0x57a7ULL) % strategies.size()];
    }
    if (spec.profile == "noisy-annotator" && h % 7 == 0) {
        strategy = "Empathic Mirroring";  // not in any catalog; exercises rejects
    }

    static const std::vector<std::string> summaries{
        "The speaker describes a situation that matters to them and shares how it feels.",
        "The speaker recounts a recent experience and signals a clear emotional reaction.",
        "The speaker talks through what happened and what it means to them.",
        "The speaker lays out their circumstances and the feeling behind them.",
    };
    const auto& summary = summaries[mix64(h ^ 0x5333ULL) % summaries.size()];

    std::string out;
    out += "<Summary> " + summary + "\n";
    out += "<Emotion> " + emotion + "\n";
    out += "<Strategy> " + strategy + ", I chose " + strategy +
           " because it matches what the speaker needs at this point in the conversation.\n";
    out += "<Response> " + reply;
    return out;
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

struct ParsedUrl {
    std::string scheme;
    std::string host;
    int port = 80;
    std::string path = "/";
};

inline ParsedUrl parse_url(std::string_view url) {
    ParsedUrl out;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw ConfigError("bad endpoint URL: '" + std::string(url) + "'");
    }
    out.scheme = std::string(url.substr(0, scheme_end));
    if (out.scheme != "http" && out.scheme != "https") {
        throw ConfigError("unsupported endpoint scheme: '" + out.scheme + "'");
    }
    auto rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    auto authority = path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
    if (path_start != std::string_view::npos) out.path = std::string(rest.substr(path_start));
    auto colon = authority.find(':');
    if (colon == std::string_view::npos) {
        out.host = std::string(authority);
        out.port = out.scheme == "https" ? 443 : 80;
    } else {
        out.host = std::string(authority.substr(0, colon));
        out.port = std::atoi(std::string(authority.substr(colon + 1)).c_str());
    }
    if (out.host.empty() || out.port <= 0) {
        throw ConfigError("bad endpoint URL: '" + std::string(url) + "'");
    }
    return out;
}

inline bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// completion requests
// ---------------------------------------------------------------------------

// One chat completion. Mock endpoints answer locally as pure functions of
// (seed, prompt). HTTP endpoints speak the chat-completions JSON shape
// {model, messages, temperature} -> choices[0].message.content, with
// exponential backoff on transient failures (connect errors, 429, 5xx).
inline std::string request_completion(const JudgeId& judge, std::string_view prompt,
                                      const JudgeOptions& options) {
    if (detail::is_mock_endpoint(judge.endpoint)) {
        return detail::mock_completion(detail::parse_mock_endpoint(judge.endpoint), prompt);
    }
    const auto url = detail::parse_url(judge.endpoint);

    json body{{"model", options.model},
              {"messages", json::array({json{{"role", "user"}, {"content", std::string(prompt)}}})},
              {"temperature", options.temperature}};
    httplib::Headers headers;
    if (!options.api_key_env.empty()) {
        if (const char* key = std::getenv(options.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const int attempts = std::max(0, options.retry.max_retries) + 1;
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = options.retry.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(url.host, url.port);
        const auto timeout = std::chrono::duration<double>(options.retry.timeout_seconds);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto result = client.Post(url.path, headers, body.dump(), "application/json");
        if (!result) {
            last_failure = "connection failure: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 200) {
            json payload = json::parse(result->body, nullptr, false);
            if (payload.is_discarded() || !payload.contains("choices") ||
                payload["choices"].empty()) {
                throw TransportError("malformed completion payload from " + judge.endpoint);
            }
            try {
                return payload["choices"][0].at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw TransportError("malformed completion payload from " + judge.endpoint +
                                     ": " + e.what());
            }
        }
        if (detail::retryable_status(result->status)) {
            last_failure = "status " + std::to_string(result->status);
            continue;
        }
        throw JudgeHttpError(result->status, "judge '" + judge.name + "' returned status " +
                                                 std::to_string(result->status));
    }
    throw TransportError("judge '" + judge.name + "' unreachable after " +
                         std::to_string(attempts) + " attempt(s); last: " + last_failure);
}

// ---------------------------------------------------------------------------
// dataset annotation
// ---------------------------------------------------------------------------

struct AnnotateResult {
    std::vector<AnnotatedSample> samples;
    std::vector<RejectRecord> rejects;
    std::size_t request_count = 0;
};

namespace detail {

// Bounded-concurrency index-parallel map. Results land in slots keyed by
// index, so completion order never shows in the output.
template <typename Fn>
void parallel_for(std::size_t count, int concurrency, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(concurrency, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Annotates each dialogue through the judge: build prompt, request completion,
// parse the tag grammar. Failures of any kind become reject records, never
// silent drops. The final utterance must be a listener turn; it is the reply
// being annotated and is removed from the stored context.
inline AnnotateResult annotate_dataset(const std::vector<DialogueContext>& dialogues,
                                       const JudgeId& judge, const StrategyCatalog& catalog,
                                       const JudgeOptions& options) {
    AnnotateResult result;
    std::vector<std::optional<AnnotatedSample>> slots(dialogues.size());
    std::vector<std::optional<RejectRecord>> reject_slots(dialogues.size());
    std::atomic<std::size_t> requests{0};

    detail::parallel_for(dialogues.size(), options.concurrency, [&](std::size_t i) {
        const auto& dialogue = dialogues[i];
        try {
            if (!dialogue.emotion_gold) {
                throw PromptError("no gold emotion");
            }
            if (dialogue.utterances.size() < 2 ||
                dialogue.utterances.back().role != Role::listener) {
                throw PromptError("dialogue does not end with a listener reply over a "
                                  "non-empty context");
            }
            DialogueContext context = dialogue;
            const std::string reply = context.utterances.back().text;
            context.utterances.pop_back();

            const auto prompt =
                build_annotation_prompt(context, *dialogue.emotion_gold, reply, catalog);
            requests.fetch_add(1);
            const auto completion = request_completion(judge, prompt, options);
            Annotation annotation = parse_annotation(completion, catalog);

            AnnotatedSample sample;
            sample.sample_id = dialogue.dialogue_id;
            sample.context = std::move(context);
            sample.annotation = std::move(annotation);
            sample.provenance = Provenance::llm_annotated;
            slots[i] = std::move(sample);
        } catch (const Error& e) {
            reject_slots[i] = RejectRecord{dialogue.dialogue_id,
                                           std::string(e.kind()) + ": " + e.what()};
        }
    });

    for (std::size_t i = 0; i < dialogues.size(); ++i) {
        if (slots[i]) result.samples.push_back(std::move(*slots[i]));
        if (reject_slots[i]) result.rejects.push_back(std::move(*reject_slots[i]));
    }
    result.request_count = requests.load();
    return result;
}

// ---------------------------------------------------------------------------
// panel scoring
// ---------------------------------------------------------------------------

struct PanelResult {
    ScoreMatrix matrix;
    std::vector<RejectRecord> exclusions;
    std::size_t request_count = 0;
};

// Fills the judge-by-sample matrix. A noncompliant completion gets exactly one
// re-ask; a cell that still fails excludes its sample row entirely (listwise),
// keeping every judge vector aligned over the same samples.
inline PanelResult score_dataset_with_panel(const std::vector<AnnotatedSample>& samples,
                                            const std::vector<JudgeId>& panel,
                                            const JudgeOptions& options) {
    if (panel.size() < 2) {
        throw PanelError("panel must contain at least 2 judges");
    }
    {
        std::set<std::string> names;
        for (const auto& judge : panel) {
            if (!names.insert(judge.name).second) {
                throw PanelError("duplicate judge name '" + judge.name + "'");
            }
        }
    }

    PanelResult result;
    std::atomic<std::size_t> requests{0};
    // cells[j][i]: judge j's score for sample i, or an error note
    std::vector<std::vector<std::optional<int>>> cells(
        panel.size(), std::vector<std::optional<int>>(samples.size()));
    std::vector<std::vector<std::string>> failures(panel.size(),
                                                   std::vector<std::string>(samples.size()));

    for (std::size_t j = 0; j < panel.size(); ++j) {
        const auto& judge = panel[j];
        detail::parallel_for(samples.size(), options.concurrency, [&](std::size_t i) {
            const auto& sample = samples[i];
            const auto prompt = build_scoring_prompt(sample.context, sample.annotation.response,
                                                     render_reasoning(sample.annotation));
            for (int ask = 0; ask < 2; ++ask) {  // one re-ask on noncompliance
                try {
                    requests.fetch_add(1);
                    const auto completion = request_completion(judge, prompt, options);
                    cells[j][i] = extract_integer_score(completion);
                    return;
                } catch (const Error& e) {
                    failures[j][i] = std::string(e.kind()) + ": " + e.what();
                }
            }
        });
    }

    for (std::size_t j = 0; j < panel.size(); ++j) {
        result.matrix.scores_by_judge[panel[j].name] = {};
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        bool complete = true;
        std::string reason;
        for (std::size_t j = 0; j < panel.size(); ++j) {
            if (!cells[j][i]) {
                complete = false;
                reason = "judge '" + panel[j].name + "': " + failures[j][i];
                break;
            }
        }
        if (!complete) {
            result.exclusions.push_back(RejectRecord{samples[i].sample_id, reason});
            continue;
        }
        result.matrix.sample_ids.push_back(samples[i].sample_id);
        for (std::size_t j = 0; j < panel.size(); ++j) {
            result.matrix.scores_by_judge[panel[j].name].push_back(
                static_cast<double>(*cells[j][i]));
        }
    }
    result.request_count = requests.load();
    return result;
}

}  // namespace csa
