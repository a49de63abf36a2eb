#pragma once

#include <string>

#include "nsg/dataset/dataset_config.hpp"
#include "nsg/dataset/schema.hpp"
#include "nsg/rng.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

enum class AnswerOrder { answer_first, answer_last };

inline const char* to_string(AnswerOrder o) {
    return o == AnswerOrder::answer_first ? "answer_first" : "answer_last";
}

// Stable 50/50 assignment per (record, run seed); the same record keeps its
// order across phases and reruns of one experiment.
inline AnswerOrder assign_answer_order(const std::string& record_id, std::uint64_t run_seed) {
    return stable_coin(run_seed, "answer_order:" + record_id) ? AnswerOrder::answer_first
                                                              : AnswerOrder::answer_last;
}

struct ReferencePromptSpec {
    RenderedQuestion question;
    AnswerOrder answer_order = AnswerOrder::answer_last;
    LabelVocabulary vocabulary;
    ReferenceFraming framing;
};

namespace detail {

inline std::string answer_section(const LabelVocabulary& vocab) {
    return "[ANSWER]\n" + vocab.positive.display() + " or " + vocab.negative.display() +
           " (you must choose only one)";
}

inline std::string body_sections() {
    return "[EXPLANATION]\nYour detailed assessment here, including discussion of risk factors "
           "and how different pieces of information influenced your decision\n\n"
           "[MOST IMPORTANT FACTORS]\nFactor 1, Factor 2, Factor 3, ... (list as many as "
           "relevant)\n\n"
           "[OTHER RELEVANT INFO]\nOther factor 1, Other factor 2, ... (list as many as "
           "relevant)\n\n"
           "[CONFIDENCE]\nLOW/MEDIUM/HIGH";
}

}  // namespace detail

// Dataset preamble, the rendered question, then the structured response
// format. The [ANSWER] section leads or trails depending on the assigned
// answer order.
inline std::string build_reference_prompt(const ReferencePromptSpec& spec) {
    std::string prompt = spec.framing.preamble;
    prompt += "\n\n";
    if (!spec.framing.subject_heading.empty()) {
        prompt += spec.framing.subject_heading + ": ";
    }
    prompt += spec.question.text;
    prompt += "\n\nRespond in exactly the following format:\n\n";
    if (spec.answer_order == AnswerOrder::answer_first) {
        prompt += detail::answer_section(spec.vocabulary) + "\n\n" + detail::body_sections();
    } else {
        prompt += detail::body_sections() + "\n\n" + detail::answer_section(spec.vocabulary);
    }
    return prompt;
}

}  // namespace nsg
