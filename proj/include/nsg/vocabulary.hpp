#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "nsg/errors.hpp"

namespace nsg {

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Binary answer vocabulary for one dataset. `canonical` are the stable label
// ids used in tables ("YES", "NO_SUBSCRIPTION", "CASE_1", ...). `surfaces`
// are the strings models are asked to produce and that we accept back;
// surfaces[0] is the display form used when building prompts. Extra entries
// act as a synonym table ("leave" => YES on Attrition, etc).
struct LabelSide {
    std::string canonical;
    std::vector<std::string> surfaces;

    const std::string& display() const { return surfaces.front(); }
};

struct LabelVocabulary {
    LabelSide positive;
    LabelSide negative;

    void validate() const {
        if (positive.canonical.empty() || negative.canonical.empty() ||
            positive.canonical == negative.canonical) {
            throw ConfigError("label vocabulary needs two distinct canonical labels");
        }
        if (positive.surfaces.empty() || negative.surfaces.empty()) {
            throw ConfigError("label vocabulary needs at least one surface per label");
        }
    }

    bool contains(const std::string& canonical) const {
        return canonical == positive.canonical || canonical == negative.canonical;
    }

    const LabelSide& side(const std::string& canonical) const {
        if (canonical == positive.canonical) return positive;
        if (canonical == negative.canonical) return negative;
        throw MetricsError("label '" + canonical + "' not in vocabulary");
    }

    const std::string& other(const std::string& canonical) const {
        return canonical == positive.canonical ? negative.canonical : positive.canonical;
    }
};

namespace detail {

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

struct SurfaceMatch {
    std::size_t end = 0;
    std::size_t length = 0;
    const std::string* canonical = nullptr;
};

// Scans `text` for a surface string with word boundaries on both sides.
// The match ending last wins; on equal end positions the longer surface wins,
// which is what keeps "NO RECURRENCE" from normalizing to RECURRENCE.
inline std::optional<SurfaceMatch> best_surface_match(const std::string& text_lower,
                                                      const LabelVocabulary& vocab) {
    std::optional<SurfaceMatch> best;
    auto scan_side = [&](const LabelSide& side) {
        auto consider = [&](const std::string& raw) {
            const std::string pat = to_lower(raw);
            if (pat.empty()) return;
            std::size_t pos = text_lower.find(pat);
            while (pos != std::string::npos) {
                const bool left_ok = pos == 0 || !is_word_char(text_lower[pos - 1]);
                const std::size_t end = pos + pat.size();
                const bool right_ok = end == text_lower.size() || !is_word_char(text_lower[end]);
                if (left_ok && right_ok) {
                    SurfaceMatch m{end, pat.size(), &side.canonical};
                    if (!best || m.end > best->end ||
                        (m.end == best->end && m.length > best->length)) {
                        best = m;
                    }
                }
                pos = text_lower.find(pat, pos + 1);
            }
        };
        consider(side.canonical);
        for (const auto& s : side.surfaces) consider(s);
    };
    scan_side(vocab.positive);
    scan_side(vocab.negative);
    return best;
}

}  // namespace detail

// Maps free text onto one of the two canonical labels. The last occurrence
// in the text wins (models often deliberate before committing); overlapping
// candidates resolve to the longest surface.
inline std::string normalize_answer(const std::string& text, const LabelVocabulary& vocab) {
    const std::string lowered = to_lower(text);
    auto m = detail::best_surface_match(lowered, vocab);
    if (!m) throw ParseError("no label from vocabulary found in: '" + trim(text) + "'");
    return *m->canonical;
}

inline std::optional<std::string> try_normalize_answer(const std::string& text,
                                                       const LabelVocabulary& vocab) {
    const std::string lowered = to_lower(text);
    auto m = detail::best_surface_match(lowered, vocab);
    if (!m) return std::nullopt;
    return *m->canonical;
}

}  // namespace nsg
