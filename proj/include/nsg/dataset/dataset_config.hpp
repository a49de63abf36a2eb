#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "nsg/dataset/question_template.hpp"
#include "nsg/dataset/schema.hpp"
#include "nsg/jsonl.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

// Framing text around the rendered question in reference prompts.
struct ReferenceFraming {
    std::string preamble;
    std::string subject_heading;  // "Employee Profile", "Patient Description", ...
};

// Per-dataset wording of the predictor prompt, mirroring the per-dataset
// panels the predictor sees (role intro, entity noun, answer-line label,
// headings, closing question).
struct PredictorFraming {
    std::string role_preamble;
    std::string study_context;
    std::string entity;             // "EMPLOYEE", "PATIENT", ...
    std::string entity_lower;       // "employee", "patient", ...
    std::string answer_line_label;  // "Likely to Leave", "Doctor's Answer", ...
    std::string assessment_heading;
    std::string factors_heading;
    std::string final_question;
};

struct DatasetConfig {
    std::string dataset_id;
    bool procedural = false;  // moral machines style: no tabular schema
    FeatureSchema schema;
    QuestionTemplate question_template;
    LabelVocabulary vocabulary;
    ReferenceFraming reference;
    PredictorFraming predictor;

    void validate() const {
        vocabulary.validate();
        if (!procedural) {
            schema.validate();
            if (schema.label_values[0] != vocabulary.positive.canonical ||
                schema.label_values[1] != vocabulary.negative.canonical) {
                throw ConfigError(dataset_id + ": schema label values must match vocabulary");
            }
            for (std::size_t i = 0; i < question_template.body.size(); ++i) {
                if (question_template.body[i] != '{') continue;
                auto close = question_template.body.find('}', i);
                if (close == std::string::npos) {
                    throw ConfigError(dataset_id + ": unterminated template placeholder");
                }
                const std::string token = question_template.body.substr(i + 1, close - i - 1);
                if (!schema.find(QuestionTemplate::feature_of_token(token))) {
                    throw ConfigError(dataset_id + ": template placeholder '" + token +
                                      "' is not a schema feature");
                }
                i = close;
            }
        }
    }
};

namespace detail {

inline LabelSide label_side_from_json(const json& j) {
    LabelSide side;
    side.canonical = j.at("canonical").get<std::string>();
    for (const auto& s : j.at("surfaces")) side.surfaces.push_back(s.get<std::string>());
    if (j.contains("synonyms")) {
        for (const auto& s : j.at("synonyms")) side.surfaces.push_back(s.get<std::string>());
    }
    return side;
}

}  // namespace detail

inline DatasetConfig load_dataset_config(const std::filesystem::path& file) {
    const json j = read_json_file(file);
    DatasetConfig cfg;
    cfg.dataset_id = j.at("dataset_id").get<std::string>();
    cfg.procedural = j.value("procedural", false);

    cfg.vocabulary.positive = detail::label_side_from_json(j.at("label").at("positive"));
    cfg.vocabulary.negative = detail::label_side_from_json(j.at("label").at("negative"));

    if (!cfg.procedural) {
        auto& schema = cfg.schema;
        schema.dataset_id = cfg.dataset_id;
        schema.label_name = j.at("label").at("column").get<std::string>();
        schema.label_values = {cfg.vocabulary.positive.canonical,
                               cfg.vocabulary.negative.canonical};
        schema.template_id = j.at("question_template").at("template_id").get<std::string>();
        for (const auto& fj : j.at("features")) {
            FeatureSpec f;
            f.name = fj.at("name").get<std::string>();
            const std::string kind = fj.at("kind").get<std::string>();
            if (kind == "categorical") {
                f.kind = FeatureKind::categorical;
                for (const auto& v : fj.at("allowed_values")) {
                    f.allowed_values.push_back(v.get<std::string>());
                }
            } else if (kind == "binned_numeric") {
                f.kind = FeatureKind::binned_numeric;
                for (const auto& e : fj.at("bin_edges")) f.bin_edges.push_back(e.get<double>());
                for (const auto& l : fj.at("bin_labels")) {
                    f.bin_labels.push_back(l.get<std::string>());
                }
                f.allowed_values = f.bin_labels;
            } else {
                throw ConfigError(cfg.dataset_id + ": unknown feature kind '" + kind + "'");
            }
            schema.features.push_back(std::move(f));
        }

        const auto& tj = j.at("question_template");
        cfg.question_template.template_id = tj.at("template_id").get<std::string>();
        cfg.question_template.body = tj.at("body").get<std::string>();
        if (tj.contains("phrases")) {
            for (const auto& [token, mapping] : tj.at("phrases").items()) {
                for (const auto& [value, phrase] : mapping.items()) {
                    cfg.question_template.phrases[token][value] = phrase.get<std::string>();
                }
            }
        }
    }

    const auto& rj = j.at("reference_prompt");
    cfg.reference.preamble = rj.at("preamble").get<std::string>();
    cfg.reference.subject_heading = rj.value("subject_heading", std::string{});

    const auto& pj = j.at("predictor_prompt");
    cfg.predictor.role_preamble = pj.at("role_preamble").get<std::string>();
    cfg.predictor.study_context = pj.value("study_context", std::string{});
    cfg.predictor.entity = pj.at("entity").get<std::string>();
    cfg.predictor.entity_lower = pj.at("entity_lower").get<std::string>();
    cfg.predictor.answer_line_label = pj.at("answer_line_label").get<std::string>();
    cfg.predictor.assessment_heading = pj.at("assessment_heading").get<std::string>();
    cfg.predictor.factors_heading = pj.at("factors_heading").get<std::string>();
    cfg.predictor.final_question = pj.at("final_question").get<std::string>();

    cfg.validate();
    return cfg;
}

inline std::filesystem::path default_config_dir() {
    if (const char* env = std::getenv("NSG_CONFIG_DIR")) return env;
#ifdef NSG_DEFAULT_CONFIG_DIR
    return NSG_DEFAULT_CONFIG_DIR;
#else
    return "configs";
#endif
}

inline DatasetConfig load_dataset_config_by_id(const std::string& dataset_id,
                                               const std::filesystem::path& config_dir) {
    const auto file = config_dir / "datasets" / (dataset_id + ".json");
    if (!std::filesystem::exists(file)) {
        throw ValidationError("unknown dataset '" + dataset_id + "' (no config at " +
                              file.string() + ")");
    }
    return load_dataset_config(file);
}

}  // namespace nsg
