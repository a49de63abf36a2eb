#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "nsg/counterfactual/ball.hpp"
#include "nsg/dataset/dataset_config.hpp"
#include "nsg/dataset/ingest.hpp"
#include "nsg/digest.hpp"
#include "nsg/gateway/gateway.hpp"
#include "nsg/jsonl.hpp"
#include "nsg/prompt/predictor.hpp"

namespace nsg {

struct DatasetRef {
    std::string id;
    std::string source;  // csv/tsv path; unused for procedural datasets
    TableFormat format = TableFormat::csv;
    int scenario_count = 15000;  // procedural datasets only
};

// One declarative experiment: datasets, generation parameters, the
// reference/predictor model pools, conditions, and run controls.
struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::filesystem::path config_dir;  // dataset config lookup root
    int parallelism = 4;
    std::vector<DatasetRef> datasets;
    GenerationParams generation;
    std::vector<ModelSpec> reference_models;
    std::vector<ModelSpec> predictor_models;
    std::vector<PredictorCondition> conditions;
    ExplanationSource explanation_source = ExplanationSource::user_facing;
    int rollouts_per_counterfactual = 1;
    bool cross_model = false;
    int bootstrap_iterations = 10000;
    std::size_t min_rr_samples = kDefaultRRMinSamples;
    bool strict_egregious = false;
    json raw;  // canonical source document, kept for the digest

    bool all_simulated() const {
        for (const auto& m : reference_models) {
            if (m.kind == ModelKind::remote) return false;
        }
        for (const auto& m : predictor_models) {
            if (m.kind == ModelKind::remote) return false;
        }
        return true;
    }

    bool has_condition(PredictorCondition c) const {
        for (auto cc : conditions) {
            if (cc == c) return true;
        }
        return false;
    }
};

namespace detail {

inline ModelSpec model_spec_from_json(const json& j, bool predictor_side) {
    ModelSpec spec;
    spec.model_id = j.at("model_id").get<std::string>();
    spec.family = j.at("family").get<std::string>();
    const std::string kind = j.value("kind", "remote");
    if (kind == "remote") {
        spec.kind = ModelKind::remote;
        auto& e = spec.endpoint;
        e.model_id = spec.model_id;
        e.family = spec.family;
        e.base_url = j.at("base_url").get<std::string>();
        e.api_path = j.value("api_path", e.api_path);
        e.credential_env = j.value("credential_env", std::string{});
        e.reasoning_strength = reasoning_from_string(j.value("reasoning_strength", "none"));
        e.temperature = j.value("temperature", -1.0);
        e.max_output_tokens = j.value("max_output_tokens", 0);
        e.max_retries = j.value("max_retries", 4);
        e.requests_per_minute = j.value("requests_per_minute", 0);
        e.retry_base_ms = j.value("retry_base_ms", 500);
        e.timeout_seconds = j.value("timeout_seconds", 300);
        e.validate();
    } else if (kind == "simulated") {
        if (predictor_side) {
            spec.kind = ModelKind::simulated_predictor;
            spec.strategy =
                predictor_strategy_from_string(j.value("strategy", "rule_following"));
        } else {
            spec.kind = ModelKind::simulated_reference;
            auto& s = spec.simulated;
            s.model_id = spec.model_id;
            s.family = spec.family;
            s.threshold = j.value("threshold", 0.0);
            s.noise_rate = j.value("noise_rate", 0.0);
            s.explanation_style =
                explanation_style_from_string(j.value("explanation_style", "faithful_full"));
            s.topk = j.value("topk", 3);
            if (j.contains("weights")) {
                for (const auto& [feature, table] : j.at("weights").items()) {
                    for (const auto& [value, w] : table.items()) {
                        s.weights[feature][value] = w.get<double>();
                    }
                }
            }
            spec.weights_seed = j.value("weights_seed", std::uint64_t{0});
            if (s.weights.empty() && !j.contains("weights_seed")) {
                throw ConfigError("simulated reference '" + spec.model_id +
                                  "' needs either explicit weights or a weights_seed");
            }
        }
    } else {
        throw ConfigError("unknown model kind '" + kind + "'");
    }
    return spec;
}

// Fields that do not change results are stripped before hashing, so retuning
// parallelism or credentials never invalidates finished phases.
inline json canonicalize_for_digest(json j) {
    j.erase("output_dir");
    j.erase("parallelism");
    auto strip_models = [](json& models) {
        if (!models.is_array()) return;
        for (auto& m : models) {
            m.erase("credential_env");
            m.erase("requests_per_minute");
            m.erase("max_retries");
            m.erase("retry_base_ms");
            m.erase("timeout_seconds");
        }
    };
    if (j.contains("reference_models")) strip_models(j["reference_models"]);
    if (j.contains("predictor_models")) strip_models(j["predictor_models"]);
    return j;
}

}  // namespace detail

inline std::string config_digest(const ExperimentConfig& config) {
    return sha256_hex(detail::canonicalize_for_digest(config.raw).dump());
}

// Relative paths in the config (output_dir, config_dir, dataset sources)
// resolve against the current working directory.
inline ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig config;
    config.raw = j;
    config.version = j.value("version", 1);
    if (config.version != 1) throw ValidationError("unsupported config version");
    config.seed = j.value("seed", std::uint64_t{0});
    config.output_dir = std::filesystem::absolute(j.value("output_dir", std::string{"run"}));
    config.config_dir = j.contains("config_dir")
                            ? std::filesystem::path(j.at("config_dir").get<std::string>())
                            : default_config_dir();
    config.config_dir = std::filesystem::absolute(config.config_dir);
    config.parallelism = j.value("parallelism", 4);

    for (const auto& dj : j.at("datasets")) {
        DatasetRef ref;
        ref.id = dj.at("id").get<std::string>();
        ref.source = dj.value("source", std::string{});
        ref.format = dj.value("format", std::string{"csv"}) == "tsv" ? TableFormat::tsv
                                                                     : TableFormat::csv;
        ref.scenario_count = dj.value("scenario_count", 15000);
        config.datasets.push_back(std::move(ref));
    }

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        config.generation.max_distance = g.value("max_distance", 2);
        config.generation.min_ball_size = g.value("min_ball_size", 10);
        config.generation.balance_tolerance = g.value("balance_tolerance", 0.3);
        config.generation.pairs_per_dataset = g.value("pairs_per_dataset", 1000);
    }
    config.generation.seed = config.seed;

    for (const auto& mj : j.at("reference_models")) {
        config.reference_models.push_back(detail::model_spec_from_json(mj, false));
    }
    for (const auto& mj : j.at("predictor_models")) {
        config.predictor_models.push_back(detail::model_spec_from_json(mj, true));
    }

    if (j.contains("conditions")) {
        for (const auto& c : j.at("conditions")) {
            config.conditions.push_back(condition_from_string(c.get<std::string>()));
        }
    } else {
        config.conditions = {PredictorCondition::baseline,
                             PredictorCondition::with_explanation};
    }
    config.explanation_source = j.value("explanation_source", std::string{"user_facing"}) ==
                                        "reasoning_trace"
                                    ? ExplanationSource::reasoning_trace
                                    : ExplanationSource::user_facing;
    config.rollouts_per_counterfactual = j.value("rollouts_per_counterfactual", 1);
    config.cross_model = j.value("cross_model", false);
    config.bootstrap_iterations = j.value("bootstrap_iterations", 10000);
    config.min_rr_samples = j.value("min_rr_samples", kDefaultRRMinSamples);
    config.strict_egregious = j.value("strict_egregious", false);
    return config;
}

inline void validate_experiment_config(const ExperimentConfig& config) {
    if (config.datasets.empty()) throw ValidationError("config lists no datasets");
    if (config.reference_models.empty()) throw ValidationError("config lists no reference models");
    if (config.predictor_models.empty()) throw ValidationError("config lists no predictor models");
    if (config.conditions.empty()) throw ValidationError("config enables no conditions");
    if (config.parallelism < 1) throw ValidationError("parallelism must be >= 1");
    if (config.rollouts_per_counterfactual < 1) {
        throw ValidationError("rollouts_per_counterfactual must be >= 1");
    }
    if (config.has_condition(PredictorCondition::with_explanation) &&
        !config.has_condition(PredictorCondition::baseline)) {
        throw ValidationError("with_explanation requires the baseline condition (NSG needs "
                              "both accuracies)");
    }
    if (config.cross_model) {
        std::set<std::string> families;
        for (const auto& m : config.reference_models) families.insert(m.family);
        if (families.size() < 2) {
            throw ValidationError("cross_model requires reference models from >= 2 families");
        }
        if (!config.has_condition(PredictorCondition::with_explanation)) {
            throw ValidationError("cross_model requires the with_explanation condition");
        }
    }
    std::set<std::string> model_ids;
    for (const auto& m : config.reference_models) {
        if (!model_ids.insert(m.model_id).second) {
            throw ValidationError("duplicate model_id '" + m.model_id + "'");
        }
    }
    for (const auto& dataset : config.datasets) {
        const auto ds_config = load_dataset_config_by_id(dataset.id, config.config_dir);
        if (ds_config.procedural) {
            for (const auto& m : config.reference_models) {
                if (m.kind == ModelKind::simulated_reference) {
                    throw ValidationError("simulated reference models score tabular records "
                                          "and cannot run on procedural dataset '" +
                                          dataset.id + "'");
                }
            }
            if (dataset.scenario_count < 2) {
                throw ValidationError("dataset '" + dataset.id + "' needs scenario_count >= 2");
            }
        } else if (dataset.source.empty()) {
            throw ValidationError("dataset '" + dataset.id + "' needs a source file");
        }
    }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
    const json j = read_json_file(file);
    auto config = parse_experiment_config(j);
    validate_experiment_config(config);
    return config;
}

}  // namespace nsg
