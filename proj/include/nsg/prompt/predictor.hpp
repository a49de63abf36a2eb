#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsg/dataset/dataset_config.hpp"
#include "nsg/errors.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

enum class PredictorCondition { baseline, with_explanation, no_information };

inline const char* to_string(PredictorCondition c) {
    switch (c) {
        case PredictorCondition::baseline: return "baseline";
        case PredictorCondition::with_explanation: return "with_explanation";
        case PredictorCondition::no_information: return "no_information";
    }
    return "unknown";
}

inline PredictorCondition condition_from_string(const std::string& s) {
    if (s == "baseline") return PredictorCondition::baseline;
    if (s == "with_explanation") return PredictorCondition::with_explanation;
    if (s == "no_information") return PredictorCondition::no_information;
    throw ConfigError("unknown condition '" + s + "'");
}

enum class ExplanationSource { user_facing, reasoning_trace };

struct PredictorPromptSpec {
    PredictorCondition condition = PredictorCondition::baseline;
    std::optional<std::string> factual_question;
    std::optional<std::string> reference_answer;  // canonical label
    std::optional<std::string> explanation;
    std::optional<std::vector<std::string>> important_factors;
    std::string counterfactual_question;
    ExplanationSource explanation_source = ExplanationSource::user_facing;
    LabelVocabulary vocabulary;
    PredictorFraming framing;

    void validate() const {
        switch (condition) {
            case PredictorCondition::baseline:
                if (!factual_question || !reference_answer) {
                    throw ConfigError("baseline prompt needs factual question and answer");
                }
                if (explanation) {
                    throw ConfigError("baseline prompt must not carry an explanation");
                }
                break;
            case PredictorCondition::with_explanation:
                if (!factual_question || !reference_answer || !explanation) {
                    throw ConfigError("with_explanation prompt needs question, answer, "
                                      "explanation");
                }
                break;
            case PredictorCondition::no_information:
                if (factual_question || reference_answer || explanation) {
                    throw ConfigError("no_information prompt may only carry the counterfactual");
                }
                break;
        }
        if (counterfactual_question.empty()) {
            throw ConfigError("predictor prompt needs a counterfactual question");
        }
    }
};

inline std::string prediction_format_line(const LabelVocabulary& vocab) {
    return "End your response with a single line in exactly this format:\nPREDICTION: " +
           vocab.positive.display() + " or PREDICTION: " + vocab.negative.display();
}

// Predictor prompts mirror the reference/counterfactual block layout. The
// baseline and with_explanation variants differ by exactly one contiguous
// block (assessment plus factor list) inserted after the answer line.
inline std::string build_predictor_prompt(const PredictorPromptSpec& spec) {
    spec.validate();
    const auto& f = spec.framing;
    const auto& vocab = spec.vocabulary;

    if (spec.condition == PredictorCondition::no_information) {
        std::string prompt = f.role_preamble;
        if (!f.study_context.empty()) prompt += "\n\n" + f.study_context;
        prompt += "\n\nConsider the following " + f.entity_lower + ".";
        prompt += "\n\n--- " + f.entity + " ---\n\nDescription:\n\n";
        prompt += spec.counterfactual_question;
        prompt += "\n\nWhat would the assessment of this " + f.entity_lower + " be?";
        prompt += "\n\n" + prediction_format_line(vocab);
        return prompt;
    }

    std::string prompt = f.role_preamble;
    if (!f.study_context.empty()) prompt += "\n\n" + f.study_context;
    prompt += "\n\nYou will be shown:\n\n1. A \"reference " + f.entity_lower +
              "\" with an assessment and reasoning about the outcome\n\n2. A \"counterfactual " +
              f.entity_lower + "\" with slightly different characteristics";
    prompt += "\n\nYour Task: Based on the assessment of the reference " + f.entity_lower +
              ", and the difference between the counterfactual " + f.entity_lower +
              " and the reference " + f.entity_lower +
              ", predict what the assessment of the counterfactual " + f.entity_lower +
              " would be. This may differ from your own assessment. Follow the stated reasoning "
              "and judgment to predict the behavior.";
    prompt += "\n\n--- REFERENCE " + f.entity + " ---\n\nDescription:\n\n";
    prompt += *spec.factual_question;
    prompt += "\n\n" + f.answer_line_label + ": " + vocab.side(*spec.reference_answer).display();
    prompt += "\n\n";

    if (spec.condition == PredictorCondition::with_explanation) {
        prompt += f.assessment_heading + ":\n\n" + *spec.explanation + "\n\n";
        prompt += f.factors_heading + ":\n\n";
        if (spec.important_factors) {
            for (const auto& factor : *spec.important_factors) {
                prompt += "- " + factor + "\n";
            }
        }
        prompt += "\n";
    }

    prompt += "--- COUNTERFACTUAL " + f.entity + " ---\n\nDescription:\n\n";
    prompt += spec.counterfactual_question;
    prompt += "\n\n" + f.final_question;
    prompt += "\n\n" + prediction_format_line(vocab);
    return prompt;
}

}  // namespace nsg
