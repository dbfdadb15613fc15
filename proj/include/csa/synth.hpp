#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "csa/hash.hpp"
#include "csa/strategy.hpp"

namespace csa {

// Deterministic synthetic data. Everything here is keyed off (seed, index)
// through the portable hash, so regenerating a corpus always reproduces the
// same bytes on any machine.

namespace detail {

inline std::uint64_t synth_pick(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    return mix64(mix64(seed ^ salt) ^ index);
}

inline const std::vector<std::string>& synth_topics() {
    static const std::vector<std::string> topics{
        "a big exam next week",
        "a new job offer in another city",
        "my dog going missing for a whole day",
        "planning a surprise party for my sister",
        "the long drive home in heavy rain",
        "a promotion I did not expect",
        "moving into a smaller apartment",
        "an old friend calling out of the blue",
        "my first marathon this weekend",
        "a leaky roof right before winter",
        "finally finishing a project at work",
        "my neighbor's loud renovations",
        "a cancelled vacation flight",
        "finding an old photo album in the attic",
        "my garden after the storm",
    };
    return topics;
}

inline const std::vector<std::string>& synth_openers() {
    static const std::vector<std::string> openers{
        "I keep thinking about {}.",
        "So, something happened - {} has been on my mind all week.",
        "You will not believe it, but {} just turned my plans upside down.",
        "Honestly, {} left me with a lot of feelings.",
        "I wanted to tell someone about {}.",
    };
    return openers;
}

inline const std::vector<std::string>& synth_followups() {
    static const std::vector<std::string> followups{
        "It has been hard to focus on anything else since then.",
        "I am still not sure how I should handle it, to be honest.",
        "Part of me expected it, part of me did not.",
        "Everyone keeps asking me about it, which does not help.",
        "I did not sleep much last night because of it.",
    };
    return followups;
}

inline const std::vector<std::string>& synth_acks() {
    static const std::vector<std::string> acks{
        "That sounds like a lot to carry.",
        "I see, tell me more about that.",
        "Oh wow, I was not expecting that.",
        "That must have been quite a moment.",
        "I can imagine how that felt.",
    };
    return acks;
}

inline const std::vector<std::string>& synth_replies() {
    static const std::vector<std::string> replies{
        "Whatever happens next, you clearly care a lot, and that counts for something.",
        "Have you thought about what you want to do first?",
        "For what it is worth, I went through something similar last year.",
        "It makes sense to feel that way, anyone would.",
        "Maybe give yourself a day before deciding anything.",
        "What would make tomorrow a little easier for you?",
    };
    return replies;
}

inline std::string fill_template(std::string tmpl, const std::string& topic) {
    auto pos = tmpl.find("{}");
    if (pos != std::string::npos) tmpl.replace(pos, 2, topic);
    return tmpl;
}

}  // namespace detail

// ED-style CSV corpus: header plus one row per utterance, commas escaped as
// _comma_. Dialogues are 2 to 6 turns and always end with a listener reply.
inline std::string make_synthetic_corpus_csv(int dialogue_count, std::uint64_t seed) {
    const auto& emotions = default_emotion_set().labels();
    std::ostringstream out;
    out << "conv_id,utterance_idx,context,speaker_idx,utterance\n";

    const auto escape = [](const std::string& text) {
        std::string escaped;
        for (char c : text) {
            if (c == ',') escaped += "_comma_";
            else escaped.push_back(c);
        }
        return escaped;
    };

    for (int d = 0; d < dialogue_count; ++d) {
        const auto index = static_cast<std::uint64_t>(d);
        const auto& emotion = emotions[detail::synth_pick(seed, index, 1) % emotions.size()];
        const auto& topic = detail::synth_topics()[detail::synth_pick(seed, index, 2) %
                                                   detail::synth_topics().size()];
        char conv_id[32];
        std::snprintf(conv_id, sizeof(conv_id), "synth-%05d", d);

        std::vector<std::pair<int, std::string>> rows;  // (speaker_idx, text)
        rows.emplace_back(0, detail::fill_template(
                                 detail::synth_openers()[detail::synth_pick(seed, index, 3) %
                                                         detail::synth_openers().size()],
                                 topic));
        const auto shape = detail::synth_pick(seed, index, 4) % 4;
        if (shape == 1 || shape == 3) {
            rows.emplace_back(1, detail::synth_acks()[detail::synth_pick(seed, index, 5) %
                                                      detail::synth_acks().size()]);
            rows.emplace_back(0, detail::synth_followups()[detail::synth_pick(seed, index, 6) %
                                                           detail::synth_followups().size()]);
        }
        if (shape == 2) {
            // consecutive speaker turns happen in real corpora; keep some here
            rows.emplace_back(0, detail::synth_followups()[detail::synth_pick(seed, index, 7) %
                                                           detail::synth_followups().size()]);
        }
        rows.emplace_back(1, detail::synth_replies()[detail::synth_pick(seed, index, 8) %
                                                     detail::synth_replies().size()]);

        for (std::size_t i = 0; i < rows.size(); ++i) {
            out << conv_id << ',' << (i + 1) << ',' << emotion << ',' << rows[i].first << ','
                << escape(rows[i].second) << '\n';
        }
    }
    return out.str();
}

// Fully annotated synthetic pool for sampler and scoring tests. Strategy
// usage is deliberately uneven so difficulty-weighted proportions differ from
// the raw frequencies.
inline std::vector<AnnotatedSample> make_synthetic_pool(int count, std::uint64_t seed,
                                                        const StrategyCatalog& catalog) {
    const auto& emotions = default_emotion_set().labels();
    std::vector<AnnotatedSample> pool;
    pool.reserve(static_cast<std::size_t>(count));
    const int strategy_count = static_cast<int>(catalog.strategies().size());

    for (int i = 0; i < count; ++i) {
        const auto index = static_cast<std::uint64_t>(i);
        // skewed strategy assignment: low ids are far more common
        const auto r = detail::synth_pick(seed, index, 11) % 100;
        int sid = 0;
        if (r < 40) sid = 1 + static_cast<int>(detail::synth_pick(seed, index, 12) % 3);
        else if (r < 75) sid = 4 + static_cast<int>(detail::synth_pick(seed, index, 13) % 5);
        else sid = 9 + static_cast<int>(detail::synth_pick(seed, index, 14) % 6);
        sid = std::min(sid, strategy_count);
        const auto& def = catalog.by_id(sid);

        AnnotatedSample sample;
        char sample_id[32];
        std::snprintf(sample_id, sizeof(sample_id), "pool-%06d", i);
        sample.sample_id = sample_id;
        sample.provenance = Provenance::synthetic;

        const auto& emotion = emotions[detail::synth_pick(seed, index, 15) % emotions.size()];
        sample.context.dialogue_id = sample.sample_id;
        sample.context.emotion_gold = EmotionLabel(emotion);
        sample.context.utterances.push_back(Utterance{
            Role::speaker,
            detail::fill_template(detail::synth_openers()[detail::synth_pick(seed, index, 16) %
                                                          detail::synth_openers().size()],
                                  detail::synth_topics()[detail::synth_pick(seed, index, 17) %
                                                         detail::synth_topics().size()]),
            0});

        sample.annotation.summary = "The speaker shares a situation that matters to them.";
        sample.annotation.emotion = EmotionLabel(emotion);
        sample.annotation.strategy = def.name;
        sample.annotation.actions =
            "I chose " + def.name + " because it fits the speaker's needs.";
        sample.annotation.response =
            detail::synth_replies()[detail::synth_pick(seed, index, 18) %
                                    detail::synth_replies().size()];
        pool.push_back(std::move(sample));
    }
    return pool;
}

}  // namespace csa
