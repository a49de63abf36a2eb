#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsg/jsonl.hpp"
#include "nsg/prompt/predictor.hpp"

namespace nsg {

// Long-format evaluation table: one row per (reference model, predictor,
// pair, condition, explainer). `actual` is the reference model's parsed
// answer on the counterfactual; `correct` must equal predicted == actual.
// For self-explanations the explainer is the reference model itself;
// cross-model rows carry the foreign explainer plus whether it answered the
// original question the same way the reference did.
struct PredictionRow {
    std::string reference_model;
    std::string reference_family;
    std::string predictor_model;
    std::string predictor_family;
    std::string dataset_id;
    std::string pair_id;
    PredictorCondition condition = PredictorCondition::baseline;
    std::string predicted;
    std::string actual;
    bool correct = false;
    std::vector<std::string> changed;
    std::string explainer_model;
    std::string explainer_family;
    bool answer_matched = true;
    std::string dimension;  // moral machines pairs only

    bool is_self_explanation() const { return explainer_model == reference_model; }
};

using PredictionTable = std::vector<PredictionRow>;

inline json prediction_row_to_json(const PredictionRow& r) {
    return json{{"reference_model", r.reference_model},
                {"reference_family", r.reference_family},
                {"predictor_model", r.predictor_model},
                {"predictor_family", r.predictor_family},
                {"dataset_id", r.dataset_id},
                {"pair_id", r.pair_id},
                {"condition", to_string(r.condition)},
                {"predicted", r.predicted},
                {"actual", r.actual},
                {"correct", r.correct},
                {"changed", r.changed},
                {"explainer_model", r.explainer_model},
                {"explainer_family", r.explainer_family},
                {"answer_matched", r.answer_matched},
                {"dimension", r.dimension}};
}

inline PredictionRow prediction_row_from_json(const json& j) {
    PredictionRow r;
    r.reference_model = j.at("reference_model").get<std::string>();
    r.reference_family = j.at("reference_family").get<std::string>();
    r.predictor_model = j.at("predictor_model").get<std::string>();
    r.predictor_family = j.at("predictor_family").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.pair_id = j.at("pair_id").get<std::string>();
    r.condition = condition_from_string(j.at("condition").get<std::string>());
    r.predicted = j.at("predicted").get<std::string>();
    r.actual = j.at("actual").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    for (const auto& c : j.at("changed")) r.changed.push_back(c.get<std::string>());
    r.explainer_model = j.at("explainer_model").get<std::string>();
    r.explainer_family = j.at("explainer_family").get<std::string>();
    r.answer_matched = j.value("answer_matched", true);
    r.dimension = j.value("dimension", std::string{});
    if (r.correct != (r.predicted == r.actual)) {
        throw IngestError("prediction row for pair " + r.pair_id +
                          " violates correct == (predicted == actual)");
    }
    return r;
}

inline void save_prediction_table(const std::filesystem::path& path, const PredictionTable& t) {
    std::vector<json> rows;
    rows.reserve(t.size());
    for (const auto& r : t) rows.push_back(prediction_row_to_json(r));
    write_jsonl(path, rows);
}

inline PredictionTable load_prediction_table(const std::filesystem::path& path) {
    PredictionTable t;
    for_each_jsonl(path, [&](json&& j) { t.push_back(prediction_row_from_json(j)); });
    return t;
}

// Row predicate used by the accuracy operations. Cross-explainer rows are
// excluded unless explicitly requested; the headline metrics are about
// self-explanations.
struct TableFilter {
    std::optional<PredictorCondition> condition;
    std::optional<std::string> reference_model;
    std::optional<std::string> predictor_model;
    std::optional<std::string> dataset_id;
    bool self_explanations_only = true;

    bool matches(const PredictionRow& r) const {
        if (condition && r.condition != *condition) return false;
        if (reference_model && r.reference_model != *reference_model) return false;
        if (predictor_model && r.predictor_model != *predictor_model) return false;
        if (dataset_id && r.dataset_id != *dataset_id) return false;
        if (self_explanations_only && !r.is_self_explanation()) return false;
        return true;
    }
};

}  // namespace nsg
