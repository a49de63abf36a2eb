#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nsg/counterfactual/ball.hpp"
#include "nsg/dataset/dataset_config.hpp"
#include "nsg/dataset/question_template.hpp"
#include "nsg/dataset/schema.hpp"
#include "nsg/dataset/synthetic.hpp"
#include "nsg/gateway/simulated.hpp"
#include "nsg/jsonl.hpp"
#include "nsg/rng.hpp"
#include "nsg/vocabulary.hpp"

namespace nsgtest {

using namespace nsg;

inline LabelVocabulary yes_no_vocab() {
    LabelVocabulary v;
    v.positive = {"YES", {"YES", "yes"}};
    v.negative = {"NO", {"NO", "no"}};
    return v;
}

// Schema with `n_features` categorical features. Per-feature value
// vocabularies are disjoint (f0_v0, f0_v1, ...) so scrambled explanations
// can never accidentally describe a feature truthfully.
inline FeatureSchema synthetic_schema(int n_features, int values_per_feature,
                                      const std::string& dataset_id = "synthetic") {
    FeatureSchema schema;
    schema.dataset_id = dataset_id;
    schema.label_name = "label";
    schema.label_values = {"YES", "NO"};
    schema.template_id = dataset_id + "_v1";
    for (int f = 0; f < n_features; ++f) {
        FeatureSpec spec;
        spec.name = "f" + std::to_string(f);
        spec.kind = FeatureKind::categorical;
        for (int v = 0; v < values_per_feature; ++v) {
            spec.allowed_values.push_back(spec.name + "_v" + std::to_string(v));
        }
        schema.features.push_back(std::move(spec));
    }
    return schema;
}

// Template of the "<feature> is <value>." form that rule-following simulated
// predictors can read values back out of.
inline QuestionTemplate synthetic_template(const FeatureSchema& schema) {
    QuestionTemplate tmpl;
    tmpl.template_id = schema.template_id;
    std::string body = "Consider the following case.";
    for (const auto& f : schema.features) {
        body += " The " + f.name + " is {" + f.name + "}.";
    }
    tmpl.body = body;
    return tmpl;
}

inline Record make_record(const FeatureSchema& schema, const std::vector<int>& value_indices,
                          const std::string& label) {
    Record r;
    r.dataset_id = schema.dataset_id;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        r.values[schema.features[f].name] = schema.features[f].allowed_values[value_indices[f]];
    }
    r.label = label;
    r.record_id = record_content_id(schema.dataset_id, r.values);
    return r;
}

// Clustered synthetic table: a few seed rows plus perturbations 1-2 features
// away, which is what gives Hamming balls enough close neighbors. Labels are
// seeded coin flips, so neighborhoods mix labels. Duplicate value
// combinations are dropped.
inline std::vector<Record> clustered_records(const FeatureSchema& schema, int target_count,
                                             std::uint64_t seed, int n_seeds = 0) {
    Rng rng = derive_stream(seed, "clustered_records");
    const int n_features = static_cast<int>(schema.features.size());
    if (n_seeds <= 0) n_seeds = std::max(2, target_count / 40);

    std::vector<std::vector<int>> seeds;
    for (int s = 0; s < n_seeds; ++s) {
        std::vector<int> base(n_features);
        for (int f = 0; f < n_features; ++f) {
            base[f] = static_cast<int>(
                rng.below(schema.features[f].allowed_values.size()));
        }
        seeds.push_back(std::move(base));
    }

    std::vector<Record> records;
    std::map<std::string, bool> seen;
    int attempts = 0;
    while (static_cast<int>(records.size()) < target_count && attempts < target_count * 20) {
        ++attempts;
        std::vector<int> values = seeds[rng.below(seeds.size())];
        const int flips = 1 + static_cast<int>(rng.below(2));
        for (int k = 0; k < flips; ++k) {
            const int f = static_cast<int>(rng.below(n_features));
            values[f] = static_cast<int>(rng.below(schema.features[f].allowed_values.size()));
        }
        Record r = make_record(schema, values, rng.bernoulli(0.5) ? "YES" : "NO");
        if (seen.count(r.record_id)) continue;
        seen[r.record_id] = true;
        records.push_back(std::move(r));
    }
    return records;
}

// Simulated reference model with seeded weights over the schema's values.
inline SimulatedModelSpec synthetic_linear_model(const FeatureSchema& schema,
                                                 std::uint64_t seed,
                                                 const std::string& model_id = "sim_ref",
                                                 const std::string& family = "sim") {
    SimulatedModelSpec spec;
    spec.model_id = model_id;
    spec.family = family;
    spec.threshold = 0.0;
    Rng rng = derive_stream(seed, "weights:" + model_id);
    for (const auto& f : schema.features) {
        for (const auto& v : f.allowed_values) {
            spec.weights[f.name][v] = (rng.unit() * 2.0 - 1.0);
        }
    }
    return spec;
}

inline PredictorFraming synthetic_predictor_framing() {
    PredictorFraming f;
    f.role_preamble = "You are a research assistant. Your task is to study an analyst's "
                      "assessment of a reference case and predict how the analyst would assess "
                      "a new, counterfactual case.";
    f.study_context = "";
    f.entity = "CASE";
    f.entity_lower = "case";
    f.answer_line_label = "Analyst's Answer";
    f.assessment_heading = "Analyst's Assessment";
    f.factors_heading = "Most Important Factors Identified";
    f.final_question = "Based on the analyst's assessment of the reference case, how would the "
                       "analyst assess this counterfactual case?";
    return f;
}

inline ReferenceFraming synthetic_reference_framing() {
    ReferenceFraming f;
    f.preamble = "You are an analyst reviewing structured cases. Based on the following case "
                 "description, predict the outcome (YES or NO) and provide a detailed "
                 "assessment.";
    f.subject_heading = "Case Description";
    return f;
}

// Writes a loadable dataset config for the synthetic schema into
// <config_dir>/datasets/<id>.json. The machine-readable template lets the
// rule-following simulated predictor recover feature values from question
// text.
inline void write_synthetic_dataset_config(const std::filesystem::path& config_dir,
                                           const std::string& dataset_id, int n_features,
                                           int values_per_feature) {
    const auto schema = synthetic_schema(n_features, values_per_feature, dataset_id);
    const auto tmpl = synthetic_template(schema);
    json features = json::array();
    for (const auto& f : schema.features) {
        features.push_back(json{{"name", f.name},
                                {"kind", "categorical"},
                                {"allowed_values", f.allowed_values}});
    }
    const auto pf = synthetic_predictor_framing();
    const auto rf = synthetic_reference_framing();
    const json doc{
        {"dataset_id", dataset_id},
        {"label",
         json{{"column", "label"},
              {"positive", json{{"canonical", "YES"}, {"surfaces", json::array({"YES"})}}},
              {"negative", json{{"canonical", "NO"}, {"surfaces", json::array({"NO"})}}}}},
        {"features", features},
        {"question_template",
         json{{"template_id", tmpl.template_id}, {"body", tmpl.body},
              {"phrases", json::object()}}},
        {"reference_prompt",
         json{{"preamble", rf.preamble}, {"subject_heading", rf.subject_heading}}},
        {"predictor_prompt", json{{"role_preamble", pf.role_preamble},
                                  {"study_context", pf.study_context},
                                  {"entity", pf.entity},
                                  {"entity_lower", pf.entity_lower},
                                  {"answer_line_label", pf.answer_line_label},
                                  {"assessment_heading", pf.assessment_heading},
                                  {"factors_heading", pf.factors_heading},
                                  {"final_question", pf.final_question}}},
    };
    write_json_file(config_dir / "datasets" / (dataset_id + ".json"), doc);
}

// Raw (pre-binning) CSV for any tabular dataset config; see
// nsg/dataset/synthetic.hpp.
inline void write_synthetic_raw_csv(const DatasetConfig& cfg, const std::filesystem::path& path,
                                    int n_rows, std::uint64_t seed) {
    write_synthetic_table(cfg, path, n_rows, seed);
}

// Experiment config document for a fully simulated run over one synthetic
// dataset: oracle reference against a rule-following predictor.
inline json simulated_experiment_json(const std::filesystem::path& csv,
                                      const std::filesystem::path& output_dir,
                                      const std::filesystem::path& config_dir,
                                      const std::string& dataset_id, int pairs,
                                      const std::string& explanation_style = "faithful_full",
                                      double noise_rate = 0.0) {
    return json{
        {"version", 1},
        {"seed", 777},
        {"output_dir", output_dir.string()},
        {"config_dir", config_dir.string()},
        {"parallelism", 1},
        {"datasets",
         json::array({json{{"id", dataset_id}, {"source", csv.string()}, {"format", "csv"}}})},
        {"generation", json{{"max_distance", 2},
                            {"min_ball_size", 6},
                            {"balance_tolerance", 0.3},
                            {"pairs_per_dataset", pairs}}},
        {"reference_models",
         json::array({json{{"kind", "simulated"},
                           {"model_id", "oracle"},
                           {"family", "sim_ref"},
                           {"weights_seed", 11},
                           {"threshold", 0.0},
                           {"noise_rate", noise_rate},
                           {"explanation_style", explanation_style}}})},
        {"predictor_models", json::array({json{{"kind", "simulated"},
                                               {"model_id", "follower"},
                                               {"family", "sim_pred"},
                                               {"strategy", "rule_following"}}})},
        {"conditions", json::array({"baseline", "with_explanation"})},
        {"bootstrap_iterations", 300},
    };
}

}  // namespace nsgtest
