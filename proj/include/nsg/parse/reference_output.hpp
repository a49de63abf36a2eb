#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nsg/errors.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

enum class AnswerPosition { first, last, unknown };

inline const char* to_string(AnswerPosition p) {
    switch (p) {
        case AnswerPosition::first: return "first";
        case AnswerPosition::last: return "last";
        case AnswerPosition::unknown: return "unknown";
    }
    return "unknown";
}

enum class ConfidenceLevel { low, medium, high, absent };

struct ParsedReferenceOutput {
    std::string answer;  // canonical label
    std::string explanation;
    std::vector<std::string> important_factors;
    std::vector<std::string> other_factors;
    ConfidenceLevel confidence = ConfidenceLevel::absent;
    AnswerPosition answer_position = AnswerPosition::unknown;
};

namespace detail {

struct SectionSpan {
    std::size_t header_pos;
    std::size_t body_begin;
    std::string body;
};

// Case-insensitive scan for "[HEADER]" markers.
inline std::optional<std::size_t> find_header(const std::string& lowered,
                                              const std::string& header_lower) {
    const std::string needle = "[" + header_lower + "]";
    const auto pos = lowered.find(needle);
    if (pos == std::string::npos) return std::nullopt;
    return pos;
}

inline std::vector<std::string> split_factors(const std::string& body) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        std::string item = trim(current);
        while (!item.empty() && (item.front() == '-' || item.front() == '*')) {
            item = trim(item.substr(1));
        }
        if (!item.empty()) out.push_back(item);
        current.clear();
    };
    for (char c : body) {
        if (c == ',' || c == '\n') {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();
    return out;
}

}  // namespace detail

// Pulls the structured sections out of a reference model response. Headers
// are located case-insensitively; section bodies run to the next header.
// The answer comes from the [ANSWER] body (last label mention wins); if the
// section is missing, the whole response is scanned before giving up.
inline ParsedReferenceOutput parse_reference_output(const std::string& raw,
                                                    const LabelVocabulary& vocab) {
    const std::string lowered = to_lower(raw);
    struct Named {
        const char* name;
        std::optional<std::size_t> pos;
    };
    Named sections[] = {
        {"explanation", detail::find_header(lowered, "explanation")},
        {"most important factors", detail::find_header(lowered, "most important factors")},
        {"other relevant info", detail::find_header(lowered, "other relevant info")},
        {"confidence", detail::find_header(lowered, "confidence")},
        {"answer", detail::find_header(lowered, "answer")},
    };

    auto body_of = [&](const Named& section) -> std::string {
        if (!section.pos) return {};
        const std::size_t begin = *section.pos + std::string(section.name).size() + 2;
        std::size_t end = raw.size();
        for (const auto& other : sections) {
            if (other.pos && *other.pos > *section.pos && *other.pos < end) end = *other.pos;
        }
        if (begin >= end) return {};
        return trim(raw.substr(begin, end - begin));
    };

    ParsedReferenceOutput out;
    out.explanation = body_of(sections[0]);
    out.important_factors = detail::split_factors(body_of(sections[1]));
    out.other_factors = detail::split_factors(body_of(sections[2]));

    const std::string confidence_body = to_lower(body_of(sections[3]));
    if (confidence_body.find("high") != std::string::npos) {
        out.confidence = ConfidenceLevel::high;
    } else if (confidence_body.find("medium") != std::string::npos) {
        out.confidence = ConfidenceLevel::medium;
    } else if (confidence_body.find("low") != std::string::npos) {
        out.confidence = ConfidenceLevel::low;
    }

    const std::string answer_body = body_of(sections[4]);
    std::optional<std::string> answer = try_normalize_answer(answer_body, vocab);
    if (!answer) answer = try_normalize_answer(raw, vocab);
    if (!answer) {
        throw ParseError("reference output has no [ANSWER] section and no recognizable label");
    }
    out.answer = *answer;

    if (sections[4].pos && sections[0].pos) {
        out.answer_position = *sections[4].pos < *sections[0].pos ? AnswerPosition::first
                                                                  : AnswerPosition::last;
    }
    return out;
}

struct ParsedPrediction {
    std::string predicted;  // canonical label
    bool fallback_used = false;
};

// Predictor outputs should end with a "PREDICTION: <label>" line. When the
// line is missing, the final ten lines are scanned for a label instead and
// the result is marked as having used the fallback path.
inline ParsedPrediction parse_prediction(const std::string& raw, const LabelVocabulary& vocab) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : raw) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    lines.push_back(current);

    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const std::string lowered = to_lower(*it);
        const auto pos = lowered.find("prediction");
        if (pos == std::string::npos) continue;
        const auto colon = it->find(':', pos);
        if (colon == std::string::npos) continue;
        if (auto label = try_normalize_answer(it->substr(colon + 1), vocab)) {
            return {*label, false};
        }
    }

    std::string tail;
    const std::size_t start = lines.size() > 10 ? lines.size() - 10 : 0;
    for (std::size_t i = start; i < lines.size(); ++i) {
        tail += lines[i];
        tail += '\n';
    }
    if (auto label = try_normalize_answer(tail, vocab)) {
        return {*label, true};
    }
    throw ParseError("prediction output has no recognizable label");
}

}  // namespace nsg
