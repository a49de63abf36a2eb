#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsg/dataset/schema.hpp"
#include "nsg/errors.hpp"
#include "nsg/prompt/reference.hpp"
#include "nsg/rng.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

// Deterministic stand-in models. The reference side scores records with a
// known additive rule and verbalizes it in one of five styles; the predictor
// side follows stated rules, copies answers, or picks a fixed class. Between
// them they pin down what the metrics must report (a fully faithful
// explanation must score NSG = 1, an inverted one well below zero), which
// makes the whole pipeline verifiable without any network access.

enum class ExplanationStyle { faithful_full, faithful_topk, scrambled, inverted, silent };

inline const char* to_string(ExplanationStyle s) {
    switch (s) {
        case ExplanationStyle::faithful_full: return "faithful_full";
        case ExplanationStyle::faithful_topk: return "faithful_topk";
        case ExplanationStyle::scrambled: return "scrambled";
        case ExplanationStyle::inverted: return "inverted";
        case ExplanationStyle::silent: return "silent";
    }
    return "faithful_full";
}

inline ExplanationStyle explanation_style_from_string(const std::string& s) {
    if (s == "faithful_full") return ExplanationStyle::faithful_full;
    if (s == "faithful_topk") return ExplanationStyle::faithful_topk;
    if (s == "scrambled") return ExplanationStyle::scrambled;
    if (s == "inverted") return ExplanationStyle::inverted;
    if (s == "silent") return ExplanationStyle::silent;
    throw ConfigError("unknown explanation style '" + s + "'");
}

struct SimulatedModelSpec {
    std::string model_id;
    std::string family;
    std::map<std::string, std::map<std::string, double>> weights;  // feature -> value -> score
    double threshold = 0.0;  // score >= threshold -> positive label
    ExplanationStyle explanation_style = ExplanationStyle::faithful_full;
    int topk = 3;
    double noise_rate = 0.0;  // probability of flipping the final answer
};

namespace detail {

inline std::string format_weight(double w) {
    // Shortest representation that round-trips exactly: a rule-following
    // predictor that parses these numbers back must reproduce the reference
    // model's arithmetic bit for bit.
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    return buf;
}

// Permutation of [0, n) with no fixed point (n >= 2), so a scrambled
// explanation never accidentally describes a feature truthfully.
inline std::vector<std::size_t> seeded_derangement(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    if (n < 2) return perm;
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] == i) std::swap(perm[i], perm[(i + 1) % n]);
    }
    return perm;
}

}  // namespace detail

inline double simulated_score(const Record& record, const SimulatedModelSpec& spec) {
    double score = 0.0;
    for (const auto& [feature, value] : record.values) {
        auto fit = spec.weights.find(feature);
        if (fit == spec.weights.end()) {
            throw MetricsError("simulated model '" + spec.model_id + "' has no weights for "
                               "feature '" + feature + "'");
        }
        auto vit = fit->second.find(value);
        if (vit == fit->second.end()) {
            throw MetricsError("simulated model '" + spec.model_id + "' has no weight for " +
                               feature + "=" + value);
        }
        score += vit->second;
    }
    return score;
}

inline std::string simulated_answer(const Record& record, const SimulatedModelSpec& spec,
                                    const LabelVocabulary& vocab, std::uint64_t seed,
                                    std::uint64_t salt = 0) {
    const double score = simulated_score(record, spec);
    std::string answer = score >= spec.threshold ? vocab.positive.canonical
                                                 : vocab.negative.canonical;
    if (spec.noise_rate > 0.0) {
        Rng noise = derive_stream(seed, "noise:" + record.record_id, salt);
        if (noise.bernoulli(spec.noise_rate)) answer = vocab.other(answer);
    }
    return answer;
}

// Emits a full reference response in the structured section format. The
// explanation body carries a per-feature contribution table plus the
// decision rule, distorted according to the configured style.
inline std::string simulate_reference(const Record& record, const SimulatedModelSpec& spec,
                                      std::uint64_t seed, const LabelVocabulary& vocab,
                                      AnswerOrder order = AnswerOrder::answer_last,
                                      std::uint64_t salt = 0) {
    const double score = simulated_score(record, spec);
    const std::string answer = simulated_answer(record, spec, vocab, seed, salt);

    std::vector<std::string> features;
    for (const auto& [feature, _] : record.values) features.push_back(feature);

    // Rank features by the magnitude of their contribution on this record.
    std::vector<std::size_t> ranked(features.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i] = i;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        const double wa = spec.weights.at(features[a]).at(record.values.at(features[a]));
        const double wb = spec.weights.at(features[b]).at(record.values.at(features[b]));
        return std::abs(wa) > std::abs(wb);
    });

    std::vector<std::size_t> stated = ranked;  // indices whose tables get stated
    if (spec.explanation_style == ExplanationStyle::faithful_topk) {
        stated.resize(std::min<std::size_t>(stated.size(),
                                            static_cast<std::size_t>(std::max(spec.topk, 1))));
    }

    // Which feature's table gets printed under each stated name.
    std::vector<std::size_t> table_source(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) table_source[i] = i;
    if (spec.explanation_style == ExplanationStyle::scrambled && features.size() >= 2) {
        Rng rng = derive_stream(seed, "scramble:" + record.record_id);
        table_source = detail::seeded_derangement(features.size(), rng);
    }
    const double sign = spec.explanation_style == ExplanationStyle::inverted ? -1.0 : 1.0;

    std::string explanation;
    std::vector<std::string> factor_names;
    if (spec.explanation_style == ExplanationStyle::silent) {
        explanation =
            "The overall balance of this profile points to the stated outcome. No single "
            "attribute drove the decision; the conclusion rests on general impression.";
        factor_names.push_back("overall profile balance");
    } else {
        explanation = "This decision follows a fixed additive scoring rule over the stated "
                      "features.\nContribution table:\n";
        std::vector<std::size_t> in_statement_order = stated;
        std::sort(in_statement_order.begin(), in_statement_order.end());
        for (std::size_t idx : in_statement_order) {
            const auto& table = spec.weights.at(features[table_source[idx]]);
            explanation += "- " + features[idx] + ": ";
            bool first = true;
            for (const auto& [value, weight] : table) {
                if (!first) explanation += "; ";
                explanation += value + "=" + detail::format_weight(sign * weight);
                first = false;
            }
            explanation += "\n";
        }
        explanation += "Decision rule: total score >= " + detail::format_weight(spec.threshold) +
                       " predicts " + vocab.positive.display() + "; otherwise " +
                       vocab.negative.display() + ".";
        for (std::size_t idx : stated) factor_names.push_back(features[idx]);
    }

    std::string factors;
    for (std::size_t i = 0; i < factor_names.size(); ++i) {
        if (i) factors += ", ";
        factors += factor_names[i];
    }

    std::string other_info = "none";
    if (spec.explanation_style == ExplanationStyle::faithful_topk &&
        stated.size() < features.size()) {
        other_info.clear();
        for (std::size_t i = stated.size(); i < ranked.size(); ++i) {
            if (!other_info.empty()) other_info += ", ";
            other_info += features[ranked[i]];
        }
    }

    const double margin = std::abs(score - spec.threshold);
    const char* confidence = margin >= 1.0 ? "HIGH" : (margin >= 0.4 ? "MEDIUM" : "LOW");

    const std::string body_sections = "[EXPLANATION]\n" + explanation +
                                      "\n\n[MOST IMPORTANT FACTORS]\n" + factors +
                                      "\n\n[OTHER RELEVANT INFO]\n" + other_info +
                                      "\n\n[CONFIDENCE]\n" + confidence;
    const std::string answer_section = "[ANSWER]\n" + vocab.side(answer).display();
    if (order == AnswerOrder::answer_first) {
        return answer_section + "\n\n" + body_sections;
    }
    return body_sections + "\n\n" + answer_section;
}

enum class PredictorStrategy { rule_following, answer_copying, majority_class };

inline const char* to_string(PredictorStrategy s) {
    switch (s) {
        case PredictorStrategy::rule_following: return "rule_following";
        case PredictorStrategy::answer_copying: return "answer_copying";
        case PredictorStrategy::majority_class: return "majority_class";
    }
    return "rule_following";
}

inline PredictorStrategy predictor_strategy_from_string(const std::string& s) {
    if (s == "rule_following") return PredictorStrategy::rule_following;
    if (s == "answer_copying") return PredictorStrategy::answer_copying;
    if (s == "majority_class") return PredictorStrategy::majority_class;
    throw ConfigError("unknown predictor strategy '" + s + "'");
}

struct SimulatedPrediction {
    std::string raw_output;
    bool fallback_used = false;
};

namespace detail {

struct StatedRule {
    std::vector<std::pair<std::string, std::map<std::string, double>>> tables;
    double threshold = 0.0;
    std::string positive_display;
    bool valid = false;
};

inline std::optional<double> parse_weight(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::nullopt;
    return v;
}

inline StatedRule parse_stated_rule(const std::string& text) {
    StatedRule rule;
    std::size_t line_begin = 0;
    bool have_rule_line = false;
    while (line_begin <= text.size()) {
        std::size_t line_end = text.find('\n', line_begin);
        if (line_end == std::string::npos) line_end = text.size();
        const std::string line = text.substr(line_begin, line_end - line_begin);
        line_begin = line_end + 1;

        if (line.rfind("- ", 0) == 0) {
            const auto colon = line.find(": ");
            if (colon == std::string::npos) continue;
            const std::string feature = trim(line.substr(2, colon - 2));
            std::map<std::string, double> table;
            bool ok = !feature.empty();
            std::size_t pos = colon + 2;
            while (ok && pos < line.size()) {
                std::size_t sep = line.find("; ", pos);
                if (sep == std::string::npos) sep = line.size();
                const std::string entry = line.substr(pos, sep - pos);
                const auto eq = entry.rfind('=');
                if (eq == std::string::npos) {
                    ok = false;
                    break;
                }
                auto weight = parse_weight(entry.substr(eq + 1));
                const std::string value = trim(entry.substr(0, eq));
                if (!weight || value.empty()) {
                    ok = false;
                    break;
                }
                table[value] = *weight;
                pos = sep + 2;
            }
            if (ok && !table.empty()) rule.tables.emplace_back(feature, std::move(table));
        } else if (line.rfind("Decision rule:", 0) == 0) {
            const std::string marker = "total score >= ";
            const auto mpos = line.find(marker);
            const auto predicts = line.find(" predicts ");
            const auto otherwise = line.find("; otherwise ");
            if (mpos == std::string::npos || predicts == std::string::npos ||
                otherwise == std::string::npos) {
                continue;
            }
            auto thr = parse_weight(line.substr(mpos + marker.size(),
                                                predicts - mpos - marker.size()));
            if (!thr) continue;
            rule.threshold = *thr;
            rule.positive_display =
                trim(line.substr(predicts + 10, otherwise - predicts - 10));
            have_rule_line = true;
        }
    }
    rule.valid = have_rule_line && !rule.tables.empty();
    return rule;
}

inline std::string section_between(const std::string& text, const std::string& begin_marker,
                                   const std::string& end_marker) {
    const auto begin = text.find(begin_marker);
    if (begin == std::string::npos) return {};
    auto end = end_marker.empty() ? std::string::npos : text.find(end_marker, begin);
    if (end == std::string::npos) end = text.size();
    return text.substr(begin, end - begin);
}

inline std::optional<std::string> extract_reference_answer(const std::string& prompt,
                                                           const LabelVocabulary& vocab) {
    const std::string block =
        section_between(prompt, "--- REFERENCE", "--- COUNTERFACTUAL");
    if (block.empty()) return std::nullopt;
    std::size_t line_begin = 0;
    while (line_begin <= block.size()) {
        std::size_t line_end = block.find('\n', line_begin);
        if (line_end == std::string::npos) line_end = block.size();
        const std::string line = block.substr(line_begin, line_end - line_begin);
        line_begin = line_end + 1;
        if (line.size() > 120 || line.rfind("- ", 0) == 0) continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos || colon > 60) continue;
        if (auto label = try_normalize_answer(line.substr(colon + 1), vocab)) return label;
    }
    return std::nullopt;
}

inline std::string extract_counterfactual_text(const std::string& prompt) {
    const auto marker = prompt.rfind("--- COUNTERFACTUAL");
    if (marker == std::string::npos) {
        // no_information prompts carry a single entity block
        const auto solo = prompt.rfind("---");
        const std::string tail =
            solo == std::string::npos ? prompt : prompt.substr(solo);
        const auto desc = tail.find("Description:");
        return desc == std::string::npos ? tail : tail.substr(desc + 12);
    }
    std::string tail = prompt.substr(marker);
    const auto desc = tail.find("Description:");
    if (desc != std::string::npos) tail = tail.substr(desc + 12);
    const auto stop = tail.find("End your response");
    if (stop != std::string::npos) tail = tail.substr(0, stop);
    return tail;
}

// Finds the stated value of `feature` inside the counterfactual description
// by literal "<feature> is <value>" containment, which the rendering
// invariant (bin labels appear verbatim) makes reliable.
inline std::optional<std::string> match_feature_value(
    const std::string& cf_text, const std::string& feature,
    const std::map<std::string, double>& table) {
    std::vector<const std::string*> keys;
    for (const auto& [value, _] : table) keys.push_back(&value);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return a->size() > b->size(); });
    for (const std::string* value : keys) {
        const std::string needle = feature + " is " + *value;
        auto pos = cf_text.find(needle);
        while (pos != std::string::npos) {
            const std::size_t end = pos + needle.size();
            const bool boundary =
                end == cf_text.size() ||
                !std::isalnum(static_cast<unsigned char>(cf_text[end]));
            if (boundary) return *value;
            pos = cf_text.find(needle, pos + 1);
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Scripted predictor behaviors. rule_following parses any stated
// contribution table out of the prompt, applies it to the counterfactual's
// feature values and predicts the implied label; when no stated rule applies
// it falls back to repeating the reference answer (flagged). answer_copying
// always repeats the reference answer; majority_class always predicts the
// positive label.
inline SimulatedPrediction simulate_predictor(const std::string& prompt,
                                              PredictorStrategy strategy,
                                              const LabelVocabulary& vocab) {
    const auto reference_answer = detail::extract_reference_answer(prompt, vocab);
    auto copy_answer = [&](bool fallback, const char* note) -> SimulatedPrediction {
        const std::string label = reference_answer.value_or(vocab.positive.canonical);
        std::string text;
        if (note && *note) text = std::string(note) + "\n";
        text += "PREDICTION: " + vocab.side(label).display();
        return {text, fallback};
    };

    switch (strategy) {
        case PredictorStrategy::majority_class:
            return {"PREDICTION: " + vocab.positive.display(), false};
        case PredictorStrategy::answer_copying:
            return copy_answer(!reference_answer.has_value(), "");
        case PredictorStrategy::rule_following:
            break;
    }

    const detail::StatedRule rule = detail::parse_stated_rule(prompt);
    if (!rule.valid) {
        return copy_answer(true,
                           "No usable stated rule was found; repeating the reference answer.");
    }
    const std::string cf_text = detail::extract_counterfactual_text(prompt);
    double total = 0.0;
    int coverage = 0;
    for (const auto& [feature, table] : rule.tables) {
        if (auto value = detail::match_feature_value(cf_text, feature, table)) {
            total += table.at(*value);
            ++coverage;
        }
    }
    if (coverage == 0) {
        return copy_answer(
            true, "The stated rule does not apply to this counterfactual; repeating the "
                  "reference answer.");
    }
    auto positive = try_normalize_answer(rule.positive_display, vocab);
    if (!positive) {
        return copy_answer(true,
                           "The stated rule names an unknown label; repeating the reference "
                           "answer.");
    }
    const std::string label = total >= rule.threshold ? *positive : vocab.other(*positive);
    char note[128];
    std::snprintf(note, sizeof(note),
                  "Applying the stated rule to the counterfactual gives a total of %+.4f "
                  "across %d stated features.",
                  total, coverage);
    return {std::string(note) + "\nPREDICTION: " + vocab.side(label).display(), false};
}

}  // namespace nsg
