#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "csa/errors.hpp"
#include "csa/strategy.hpp"

namespace csa {

// ---------------------------------------------------------------------------
// annotation tag grammar
//
// Rendered records are line-oriented:
//
//   <Summary> the situation in brief
//   <Emotion> excited
//   <Strategy> Providing Suggestions, why and how it is applied
//   <Response> the final reply
//
// The <Strategy> line is absent for strategy-stripped records. The strategy
// name is split from the actions text at the first comma. <Context> is
// accepted as an alias for <Summary> on input.
// ---------------------------------------------------------------------------

inline std::string render_annotation(const Annotation& annotation) {
    std::string out;
    out += "<Summary> ";
    out += annotation.summary;
    out += "\n<Emotion> ";
    out += annotation.emotion.name;
    if (annotation.strategy) {
        out += "\n<Strategy> ";
        out += *annotation.strategy;
        out += ", ";
        out += annotation.actions.value_or("");
    }
    out += "\n<Response> ";
    out += annotation.response;
    return out;
}

// The reasoning-only prefix (everything but the response line); this is what
// judge panels are asked to assess against the target reply.
inline std::string render_reasoning(const Annotation& annotation) {
    std::string out;
    out += "<Summary> ";
    out += annotation.summary;
    out += "\n<Emotion> ";
    out += annotation.emotion.name;
    if (annotation.strategy) {
        out += "\n<Strategy> ";
        out += *annotation.strategy;
        out += ", ";
        out += annotation.actions.value_or("");
    }
    return out;
}

namespace detail {

struct TagFields {
    std::optional<std::string> summary;
    std::optional<std::string> emotion;
    std::optional<std::string> strategy_line;
    std::optional<std::string> response;
};

// Returns the field a line opens, or nullptr. `rest` receives the content
// after the tag token.
inline const char* match_tag(std::string_view line, std::string_view& rest) {
    static constexpr std::array<std::pair<std::string_view, const char*>, 5> tags{{
        {"<Summary>", "Summary"},
        {"<Context>", "Summary"},  // accepted alias
        {"<Emotion>", "Emotion"},
        {"<Strategy>", "Strategy"},
        {"<Response>", "Response"},
    }};
    auto stripped = trim_view(line);
    for (const auto& [token, field] : tags) {
        if (stripped.substr(0, token.size()) == token) {
            rest = stripped.substr(token.size());
            return field;
        }
    }
    return nullptr;
}

}  // namespace detail

// Inverse of render_annotation. Tolerates leading/trailing whitespace on tag
// lines and accepts tags in any order; each tag may appear at most once.
// Lines that do not open a tag continue the current field.
inline Annotation parse_annotation(std::string_view text, const StrategyCatalog& catalog) {
    detail::TagFields fields;
    std::optional<std::string>* current = nullptr;

    for (auto& raw_line : split(text, '\n')) {
        std::string_view line = raw_line;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string_view rest;
        if (const char* field = detail::match_tag(line, rest)) {
            std::optional<std::string>* slot = nullptr;
            if (std::string_view(field) == "Summary") slot = &fields.summary;
            else if (std::string_view(field) == "Emotion") slot = &fields.emotion;
            else if (std::string_view(field) == "Strategy") slot = &fields.strategy_line;
            else slot = &fields.response;
            if (slot->has_value()) {
                throw ParseError(field, "tag appears more than once");
            }
            *slot = std::string(trim_view(rest));
            current = slot;
        } else if (current != nullptr) {
            // continuation line of a multi-line field
            **current += '\n';
            **current += line;
        }
    }

    if (!fields.summary) throw ParseError("Summary");
    if (!fields.emotion) throw ParseError("Emotion");
    if (!fields.response) throw ParseError("Response");

    Annotation out;
    out.summary = trim(*fields.summary);
    out.emotion = EmotionLabel(*fields.emotion);
    out.response = trim(*fields.response);
    if (out.response.empty()) throw ParseError("Response", "empty response");
    if (fields.strategy_line) {
        auto line = trim(*fields.strategy_line);
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("Strategy", "expected 'name, actions'");
        }
        auto name = trim(line.substr(0, comma));
        const StrategyDef& def = resolve_strategy(name, catalog);
        out.strategy = def.name;
        out.actions = trim(line.substr(comma + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// think/answer envelope
// ---------------------------------------------------------------------------

struct StructuredOutput {
    std::string think_block;
    std::string answer_block;
    std::optional<Annotation> parsed;
};

namespace detail {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

// Position of the next envelope tag token at or after `from`; `which`
// receives its index (0..3) in the order above.
inline std::size_t next_envelope_tag(std::string_view text, std::size_t from, int& which) {
    constexpr std::array<std::string_view, 4> tokens{kThinkOpen, kThinkClose, kAnswerOpen,
                                                     kAnswerClose};
    std::size_t best = std::string_view::npos;
    which = -1;
    for (int i = 0; i < 4; ++i) {
        auto pos = text.find(tokens[static_cast<std::size_t>(i)], from);
        if (pos < best) {
            best = pos;
            which = i;
        }
    }
    return best;
}

// Single forward walk over the envelope. Exactly one think block followed by
// exactly one answer block, both non-empty, neither containing any envelope
// tag token; only whitespace is allowed around and between them.
inline bool walk_envelope(std::string_view text, std::string_view* think,
                          std::string_view* answer) {
    const auto ws = [](std::string_view s) { return trim_view(s).empty(); };

    auto open = text.find(kThinkOpen);
    if (open == std::string_view::npos || !ws(text.substr(0, open))) return false;
    auto content_start = open + kThinkOpen.size();

    int which = -1;
    auto close = next_envelope_tag(text, content_start, which);
    if (close == std::string_view::npos || which != 1) return false;  // must be </think>
    if (close == content_start) return false;                         // empty think block
    auto think_block = text.substr(content_start, close - content_start);

    auto after_think = close + kThinkClose.size();
    auto answer_open = text.find(kAnswerOpen, after_think);
    if (answer_open == std::string_view::npos) return false;
    if (!ws(text.substr(after_think, answer_open - after_think))) return false;
    // no other tag token may precede <answer>
    int between = -1;
    if (next_envelope_tag(text, after_think, between) != answer_open) return false;

    auto answer_start = answer_open + kAnswerOpen.size();
    auto answer_close = next_envelope_tag(text, answer_start, which);
    if (answer_close == std::string_view::npos || which != 3) return false;  // must be </answer>
    if (answer_close == answer_start) return false;                          // empty answer block
    auto answer_block = text.substr(answer_start, answer_close - answer_start);

    auto tail_start = answer_close + kAnswerClose.size();
    int trailing = -1;
    if (next_envelope_tag(text, tail_start, trailing) != std::string_view::npos) return false;
    if (!ws(text.substr(tail_start))) return false;

    if (think != nullptr) *think = think_block;
    if (answer != nullptr) *answer = answer_block;
    return true;
}

}  // namespace detail

// The bit-exact format check used by the reward engine. Total over arbitrary
// byte strings.
inline bool check_format(std::string_view text) {
    return detail::walk_envelope(text, nullptr, nullptr);
}

inline StructuredOutput split_envelope(std::string_view text, const StrategyCatalog& catalog) {
    std::string_view think;
    std::string_view answer;
    if (!detail::walk_envelope(text, &think, &answer)) {
        throw FormatError("text does not match the <think>...</think><answer>...</answer> envelope");
    }
    StructuredOutput out;
    out.think_block = std::string(think);
    out.answer_block = std::string(answer);
    try {
        out.parsed = parse_annotation(out.answer_block, catalog);
    } catch (const Error&) {
        out.parsed = std::nullopt;
    }
    return out;
}

}  // namespace csa
