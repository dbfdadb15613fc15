#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "csa/errors.hpp"
#include "csa/hash.hpp"
#include "csa/jsonl.hpp"
#include "csa/strategy.hpp"

namespace csa {

struct ImportResult {
    std::vector<DialogueContext> dialogues;
    std::vector<RejectRecord> rejects;
};

namespace detail {

// The ED-style CSV escapes commas inside utterances as "_comma_".
inline std::string unescape_commas(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    std::size_t pos = 0;
    while (pos < field.size()) {
        auto hit = field.find("_comma_", pos);
        if (hit == std::string_view::npos) {
            out.append(field.substr(pos));
            break;
        }
        out.append(field.substr(pos, hit - pos));
        out.push_back(',');
        pos = hit + 7;
    }
    return out;
}

struct CsvRow {
    std::string conv_id;
    int utterance_idx = 0;
    std::string emotion;
    int speaker_idx = 0;
    std::string utterance;
    int line_no = 0;
};

}  // namespace detail

// Conversation-grouped CSV with header
//   conv_id,utterance_idx,context,speaker_idx,utterance
// where `context` is the dialogue-level emotion label and commas inside
// utterances are escaped as _comma_. Rows are grouped by conv_id, ordered by
// utterance_idx, and re-indexed to turn_index 0..; even speaker_idx maps to
// the speaker role, odd to the listener. Malformed rows become reject records
// with their line number.
inline ImportResult import_ed_csv(std::string_view text, const EmotionSet& emotions) {
    ImportResult result;
    std::map<std::string, std::vector<detail::CsvRow>> by_conv;
    std::vector<std::string> conv_order;

    int line_no = 0;
    bool header_seen = false;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw_line;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim_view(line).empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.find("conv_id") != std::string_view::npos) continue;  // header row
        }
        auto fields = split(line, ',');
        if (fields.size() != 5) {
            result.rejects.push_back(
                RejectRecord{"line " + std::to_string(line_no),
                             "expected 5 fields, got " + std::to_string(fields.size())});
            continue;
        }
        detail::CsvRow row;
        row.line_no = line_no;
        row.conv_id = trim(fields[0]);
        row.emotion = normalize_key(fields[2]);
        row.utterance = trim(detail::unescape_commas(fields[4]));
        try {
            row.utterance_idx = std::stoi(trim(fields[1]));
            row.speaker_idx = std::stoi(trim(fields[3]));
        } catch (const std::exception&) {
            result.rejects.push_back(RejectRecord{"line " + std::to_string(line_no),
                                                  "non-integer index field"});
            continue;
        }
        if (row.conv_id.empty() || row.utterance.empty()) {
            result.rejects.push_back(RejectRecord{"line " + std::to_string(line_no),
                                                  "empty conv_id or utterance"});
            continue;
        }
        if (!emotions.contains(EmotionLabel(row.emotion))) {
            result.rejects.push_back(RejectRecord{
                "line " + std::to_string(line_no), "emotion '" + row.emotion +
                                                       "' not in the active label set"});
            continue;
        }
        if (!by_conv.contains(row.conv_id)) conv_order.push_back(row.conv_id);
        by_conv[row.conv_id].push_back(std::move(row));
    }

    for (const auto& conv_id : conv_order) {
        auto& rows = by_conv[conv_id];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const detail::CsvRow& a, const detail::CsvRow& b) {
                             return a.utterance_idx < b.utterance_idx;
                         });
        DialogueContext dialogue;
        dialogue.dialogue_id = conv_id;
        dialogue.emotion_gold = EmotionLabel(rows.front().emotion);
        int turn = 0;
        for (const auto& row : rows) {
            Utterance u;
            u.role = row.speaker_idx % 2 == 0 ? Role::speaker : Role::listener;
            u.text = row.utterance;
            u.turn_index = turn++;
            dialogue.utterances.push_back(std::move(u));
        }
        result.dialogues.push_back(std::move(dialogue));
    }
    return result;
}

// Canonical JSON-lines passthrough; bad lines become rejects instead of
// aborting the import.
inline ImportResult import_jsonl_dialogues(std::string_view text) {
    ImportResult result;
    int line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (trim_view(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            result.rejects.push_back(RejectRecord{"line " + std::to_string(line_no),
                                                  "invalid JSON"});
            continue;
        }
        try {
            result.dialogues.push_back(dialogue_from_json(j));
        } catch (const std::exception& e) {
            result.rejects.push_back(RejectRecord{"line " + std::to_string(line_no), e.what()});
        }
    }
    return result;
}

// Deterministic 8:1:1 split keyed on the dialogue id.
enum class SplitBucket { train, valid, test };

inline SplitBucket split_bucket(std::string_view dialogue_id) {
    const auto bucket = mix64(fnv1a64(dialogue_id)) % 10;
    if (bucket < 8) return SplitBucket::train;
    return bucket == 8 ? SplitBucket::valid : SplitBucket::test;
}

inline std::string_view split_suffix(SplitBucket b) {
    switch (b) {
        case SplitBucket::train: return "train";
        case SplitBucket::valid: return "valid";
        case SplitBucket::test: return "test";
    }
    return "train";
}

}  // namespace csa
