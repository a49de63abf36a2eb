#pragma once

#include <atomic>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "nsg/counterfactual/ball.hpp"
#include "nsg/counterfactual/hamming.hpp"
#include "nsg/counterfactual/moral.hpp"
#include "nsg/dataset/ingest.hpp"
#include "nsg/gateway/gateway.hpp"
#include "nsg/metrics/report.hpp"
#include "nsg/parse/reference_output.hpp"
#include "nsg/prompt/predictor.hpp"
#include "nsg/prompt/reference.hpp"
#include "nsg/run/experiment_config.hpp"
#include "nsg/run/manifest.hpp"

namespace nsg {

enum class Phase { generate, reference, predictor, metrics, report };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::generate: return "generate";
        case Phase::reference: return "reference";
        case Phase::predictor: return "predictor";
        case Phase::metrics: return "metrics";
        case Phase::report: return "report";
    }
    return "unknown";
}

inline Phase phase_from_string(const std::string& s) {
    if (s == "generate") return Phase::generate;
    if (s == "reference") return Phase::reference;
    if (s == "predict" || s == "predictor") return Phase::predictor;
    if (s == "metrics") return Phase::metrics;
    if (s == "report") return Phase::report;
    throw ValidationError("unknown phase '" + s + "'");
}

namespace detail {

// Bounded worker pool over an indexed task list. New tasks stop being
// claimed after the first failure; in-flight ones finish; the lowest-index
// exception is rethrown so failures are deterministic too.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> threads;
    const int count = std::min<int>(workers, static_cast<int>(n));
    threads.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline std::string sanitize_file_component(std::string s) {
    for (char& c : s) {
        if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    return s;
}

inline std::string utc_timestamp(bool deterministic) {
    if (deterministic) return "1970-01-01T00:00:00Z";
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace detail

// One parsed reference-model response, keyed by (record, rollout salt).
struct ReferenceOutputRow {
    std::string dataset_id;
    std::string record_id;
    std::uint64_t salt = 0;
    std::string answer_order;
    bool parse_ok = false;
    std::string answer;
    std::string explanation;
    std::vector<std::string> factors;
    std::string answer_position;
    bool used_reasoning_trace = false;
    std::string error;
};

inline json reference_row_to_json(const ReferenceOutputRow& r) {
    return json{{"dataset_id", r.dataset_id},
                {"record_id", r.record_id},
                {"salt", r.salt},
                {"answer_order", r.answer_order},
                {"parse_ok", r.parse_ok},
                {"answer", r.answer},
                {"explanation", r.explanation},
                {"factors", r.factors},
                {"answer_position", r.answer_position},
                {"used_reasoning_trace", r.used_reasoning_trace},
                {"error", r.error}};
}

inline ReferenceOutputRow reference_row_from_json(const json& j) {
    ReferenceOutputRow r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.record_id = j.at("record_id").get<std::string>();
    r.salt = j.at("salt").get<std::uint64_t>();
    r.answer_order = j.value("answer_order", std::string{});
    r.parse_ok = j.at("parse_ok").get<bool>();
    r.answer = j.value("answer", std::string{});
    r.explanation = j.value("explanation", std::string{});
    for (const auto& f : j.value("factors", json::array())) {
        r.factors.push_back(f.get<std::string>());
    }
    r.answer_position = j.value("answer_position", std::string{});
    r.used_reasoning_trace = j.value("used_reasoning_trace", false);
    r.error = j.value("error", std::string{});
    return r;
}

// Phased, file-mediated experiment pipeline:
//   generate -> reference -> predictor -> metrics -> report
// Every phase reads and writes only documented files under the run
// directory, records a completion marker bound to the config digest, and is
// idempotent: rerunning a complete phase under an unchanged config is a
// no-op, and a partially complete phase resumes from the transcript cache.
class Pipeline {
public:
    explicit Pipeline(ExperimentConfig config) : config_(std::move(config)) {
        validate_experiment_config(config_);
        digest_ = config_digest(config_);
        std::filesystem::create_directories(config_.output_dir);
        gateway_ = std::make_unique<ModelGateway>(config_.output_dir / "transcripts");
    }

    const std::filesystem::path& run_dir() const { return config_.output_dir; }
    const ExperimentConfig& config() const { return config_; }
    const std::string& digest() const { return digest_; }

    static Phase prerequisite_of(Phase p) {
        switch (p) {
            case Phase::reference: return Phase::generate;
            case Phase::predictor: return Phase::reference;
            case Phase::metrics: return Phase::predictor;
            case Phase::report: return Phase::metrics;
            default: return Phase::generate;
        }
    }

    json run_phase(Phase phase) {
        RunManifest manifest = load_manifest(config_.output_dir);
        if (manifest.config_digest.empty()) {
            manifest.run_id = digest_.substr(0, 16);
            manifest.config_digest = digest_;
        }
        if (phase != Phase::generate) {
            const Phase prereq = prerequisite_of(phase);
            if (!manifest.phase_current(phase_name(prereq), digest_)) {
                throw ValidationError(
                    std::string("phase '") + phase_name(phase) + "' requires phase '" +
                    phase_name(prereq) +
                    "' to be complete under the current config; rerun it (the existing marker "
                    "is missing or belongs to a different config digest)");
            }
        }
        if (manifest.phase_current(phase_name(phase), digest_)) {
            json counts = manifest.phases.at(phase_name(phase)).counts;
            counts["no_op"] = true;
            return counts;
        }

        PhaseMarker marker;
        marker.config_digest = digest_;
        marker.started = detail::utc_timestamp(config_.all_simulated());
        json counts;
        switch (phase) {
            case Phase::generate: counts = phase_generate(); break;
            case Phase::reference: counts = phase_reference(); break;
            case Phase::predictor: counts = phase_predictor(); break;
            case Phase::metrics: counts = phase_metrics(); break;
            case Phase::report: counts = phase_report(); break;
        }
        marker.finished = detail::utc_timestamp(config_.all_simulated());
        marker.complete = true;
        marker.counts = counts;
        manifest.config_digest = digest_;
        manifest.phases[phase_name(phase)] = std::move(marker);
        save_manifest(config_.output_dir, manifest);
        return counts;
    }

    json full_run() {
        for (Phase phase : {Phase::generate, Phase::reference, Phase::predictor, Phase::metrics,
                            Phase::report}) {
            run_phase(phase);
        }
        return read_json_file(config_.output_dir / "report" / "metrics.json");
    }

private:
    // ----- shared state loading -------------------------------------------

    const DatasetConfig& dataset_config(const std::string& id) {
        auto it = dataset_configs_.find(id);
        if (it == dataset_configs_.end()) {
            it = dataset_configs_
                     .emplace(id, load_dataset_config_by_id(id, config_.config_dir))
                     .first;
        }
        return it->second;
    }

    std::uint64_t dataset_seed(const std::string& id) const {
        return splitmix64(config_.seed ^ fnv1a64("dataset:" + id));
    }

    std::uint64_t model_sim_seed(const std::string& model_id) const {
        return splitmix64(config_.seed ^ fnv1a64("model:" + model_id));
    }

    std::filesystem::path pairs_file(const std::string& ds) const {
        return config_.output_dir / "pairs" / (detail::sanitize_file_component(ds) + ".jsonl");
    }
    std::filesystem::path records_file(const std::string& ds) const {
        return config_.output_dir / "records" / (detail::sanitize_file_component(ds) + ".jsonl");
    }
    std::filesystem::path questions_file(const std::string& ds) const {
        return config_.output_dir / "questions" /
               (detail::sanitize_file_component(ds) + ".jsonl");
    }
    std::filesystem::path reference_file(const std::string& model) const {
        return config_.output_dir / "reference" /
               (detail::sanitize_file_component(model) + ".jsonl");
    }

    std::vector<CounterfactualPair> load_pairs(const std::string& ds) const {
        std::vector<CounterfactualPair> pairs;
        for_each_jsonl(pairs_file(ds), [&](json&& j) {
            CounterfactualPair p;
            p.pair_id = j.at("pair_id").get<std::string>();
            p.dataset_id = j.at("dataset_id").get<std::string>();
            p.factual_id = j.at("factual_id").get<std::string>();
            p.counterfactual_id = j.at("counterfactual_id").get<std::string>();
            for (const auto& c : j.at("changed")) p.changed.push_back(c.get<std::string>());
            p.distance = j.at("distance").get<int>();
            p.dimension = j.value("dimension", std::string{});
            pairs.push_back(std::move(p));
        });
        return pairs;
    }

    std::map<std::string, std::string> load_questions(const std::string& ds) const {
        std::map<std::string, std::string> questions;
        for_each_jsonl(questions_file(ds), [&](json&& j) {
            questions[j.at("record_id").get<std::string>()] = j.at("text").get<std::string>();
        });
        return questions;
    }

    std::map<std::string, Record> load_records(const std::string& ds) const {
        std::map<std::string, Record> records;
        const auto file = records_file(ds);
        if (!std::filesystem::exists(file)) return records;
        for_each_jsonl(file, [&](json&& j) {
            Record r;
            r.record_id = j.at("record_id").get<std::string>();
            r.dataset_id = j.at("dataset_id").get<std::string>();
            for (const auto& [k, v] : j.at("values").items()) {
                r.values[k] = v.get<std::string>();
            }
            r.label = j.at("label").get<std::string>();
            records.emplace(r.record_id, std::move(r));
        });
        return records;
    }

    // Simulated reference models may derive their per-dataset weight tables
    // from a seed instead of an explicit table.
    ModelSpec materialized_reference(const ModelSpec& model, const std::string& dataset_id) {
        if (model.kind != ModelKind::simulated_reference || model.weights_seed == 0) {
            return model;
        }
        ModelSpec resolved = model;
        const auto& schema = dataset_config(dataset_id).schema;
        for (const auto& feature : schema.features) {
            for (const auto& value : feature.allowed_values) {
                Rng rng = derive_stream(model.weights_seed,
                                        dataset_id + ":" + feature.name + ":" + value);
                resolved.simulated.weights[feature.name][value] = rng.unit() * 2.0 - 1.0;
            }
        }
        return resolved;
    }

    // ----- phase: generate -------------------------------------------------

    json phase_generate() {
        json counts = json::object();
        for (const auto& ds : config_.datasets) {
            const auto& cfg = dataset_config(ds.id);
            GenerationParams params = config_.generation;
            params.seed = dataset_seed(ds.id);
            json ds_counts;

            std::vector<CounterfactualPair> pairs;
            std::vector<json> question_rows;
            if (cfg.procedural) {
                const auto vocab = make_default_moral_vocabulary();
                const auto scenarios =
                    generate_moral_scenarios(ds.scenario_count, params.seed, vocab);
                auto all_pairs = pair_moral_scenarios(scenarios, params.seed);
                if (static_cast<int>(all_pairs.size()) > params.pairs_per_dataset) {
                    Rng rng = derive_stream(params.seed, "moral_sample");
                    const auto chosen = rng.sample_indices(
                        all_pairs.size(), static_cast<std::size_t>(params.pairs_per_dataset));
                    for (std::size_t idx : chosen) pairs.push_back(all_pairs[idx]);
                } else {
                    pairs = std::move(all_pairs);
                }
                std::map<std::string, const MoralScenario*> by_id;
                for (const auto& s : scenarios) by_id[s.scenario_id] = &s;
                std::map<std::string, std::string> questions;
                for (const auto& p : pairs) {
                    questions[p.factual_id] = moral_question_text(*by_id.at(p.factual_id));
                    questions[p.counterfactual_id] =
                        moral_question_text(*by_id.at(p.counterfactual_id));
                }
                for (const auto& [id, text] : questions) {
                    question_rows.push_back(json{{"record_id", id}, {"text", text}});
                }
                ds_counts["scenarios"] = scenarios.size();
            } else {
                const auto raw =
                    load_raw_table(std::filesystem::absolute(ds.source), ds.format);
                auto deduped = deduplicate(bin_features(raw, cfg.schema));
                const auto& records = deduped.records;

                std::vector<json> record_rows;
                record_rows.reserve(records.size());
                for (const auto& r : records) {
                    json values = json::object();
                    for (const auto& [k, v] : r.values) values[k] = v;
                    record_rows.push_back(json{{"record_id", r.record_id},
                                               {"dataset_id", r.dataset_id},
                                               {"values", values},
                                               {"label", r.label}});
                    question_rows.push_back(
                        json{{"record_id", r.record_id},
                             {"text", render_question(r, cfg.question_template).text}});
                }
                write_jsonl(records_file(ds.id), record_rows);

                const auto graph = build_neighbor_graph(records, params.max_distance);
                std::vector<HammingBall> balls;
                std::size_t skip_insufficient = 0, skip_imbalanced = 0;
                for (const auto& r : records) {
                    auto outcome = build_balanced_ball(r.record_id, graph, records, params);
                    if (std::holds_alternative<HammingBall>(outcome)) {
                        balls.push_back(std::get<HammingBall>(std::move(outcome)));
                    } else if (std::get<SkipReason>(outcome) ==
                               SkipReason::insufficient_neighbors) {
                        ++skip_insufficient;
                    } else {
                        ++skip_imbalanced;
                    }
                }
                auto sampled = sample_pairs(balls, records, graph, params);
                pairs = std::move(sampled.pairs);

                ds_counts["records"] = records.size();
                ds_counts["label_conflicts"] = deduped.conflicts.size();
                ds_counts["balls"] = balls.size();
                ds_counts["balls_skipped_insufficient"] = skip_insufficient;
                ds_counts["balls_skipped_imbalanced"] = skip_imbalanced;
                ds_counts["pairs_truncated"] = sampled.truncated;
            }

            std::vector<json> pair_rows;
            pair_rows.reserve(pairs.size());
            for (const auto& p : pairs) {
                pair_rows.push_back(json{{"pair_id", p.pair_id},
                                         {"dataset_id", p.dataset_id},
                                         {"factual_id", p.factual_id},
                                         {"counterfactual_id", p.counterfactual_id},
                                         {"changed", p.changed},
                                         {"distance", p.distance},
                                         {"dimension", p.dimension}});
            }
            write_jsonl(pairs_file(ds.id), pair_rows);
            write_jsonl(questions_file(ds.id), question_rows);
            ds_counts["pairs"] = pairs.size();
            counts[ds.id] = std::move(ds_counts);
        }
        return counts;
    }

    // ----- phase: reference ------------------------------------------------

    struct ReferenceTask {
        std::string dataset_id;
        std::string record_id;
        std::uint64_t salt = 0;
    };

    std::vector<ReferenceTask> reference_tasks() {
        std::vector<ReferenceTask> tasks;
        for (const auto& ds : config_.datasets) {
            const auto pairs = load_pairs(ds.id);
            std::set<std::string> factual_ids, counterfactual_ids;
            for (const auto& p : pairs) {
                factual_ids.insert(p.factual_id);
                counterfactual_ids.insert(p.counterfactual_id);
            }
            std::set<std::string> all_ids = factual_ids;
            all_ids.insert(counterfactual_ids.begin(), counterfactual_ids.end());
            for (const auto& id : all_ids) {
                tasks.push_back({ds.id, id, 0});
                if (counterfactual_ids.count(id)) {
                    for (int salt = 1; salt < config_.rollouts_per_counterfactual; ++salt) {
                        tasks.push_back({ds.id, id, static_cast<std::uint64_t>(salt)});
                    }
                }
            }
        }
        return tasks;
    }

    json phase_reference() {
        const auto tasks = reference_tasks();
        std::map<std::string, std::map<std::string, std::string>> questions;
        std::map<std::string, std::map<std::string, Record>> records;
        for (const auto& ds : config_.datasets) {
            questions[ds.id] = load_questions(ds.id);
            records[ds.id] = load_records(ds.id);
        }

        const int workers = config_.all_simulated() ? 1 : config_.parallelism;
        json counts = json::object();
        for (const auto& model : config_.reference_models) {
            std::map<std::string, ModelSpec> materialized;
            for (const auto& ds : config_.datasets) {
                materialized.emplace(ds.id, materialized_reference(model, ds.id));
            }
            std::vector<ReferenceOutputRow> rows(tasks.size());
            std::atomic<std::size_t> cache_hits{0};
            detail::parallel_for(tasks.size(), workers, [&](std::size_t i) {
                const auto& task = tasks[i];
                const auto& cfg = dataset_config(task.dataset_id);
                ReferencePromptSpec spec;
                spec.question = {task.record_id, questions.at(task.dataset_id).at(task.record_id),
                                 cfg.dataset_id};
                spec.answer_order = assign_answer_order(task.record_id, config_.seed);
                spec.vocabulary = cfg.vocabulary;
                spec.framing = cfg.reference;
                const std::string prompt = build_reference_prompt(spec);

                CallContext context;
                context.vocabulary = &cfg.vocabulary;
                context.answer_order = spec.answer_order;
                context.salt = task.salt;
                context.sim_seed = model_sim_seed(model.model_id);
                auto record_it = records.at(task.dataset_id).find(task.record_id);
                if (record_it != records.at(task.dataset_id).end()) {
                    context.record = &record_it->second;
                }
                const auto& spec_model = materialized.at(task.dataset_id);
                const auto transcript = gateway_->complete(spec_model, prompt, context);
                if (transcript.from_cache) cache_hits.fetch_add(1);

                ReferenceOutputRow row;
                row.dataset_id = task.dataset_id;
                row.record_id = task.record_id;
                row.salt = task.salt;
                row.answer_order = to_string(spec.answer_order);
                try {
                    const auto parsed =
                        parse_reference_output(transcript.raw_output, cfg.vocabulary);
                    row.parse_ok = true;
                    row.answer = parsed.answer;
                    row.explanation = parsed.explanation;
                    row.factors = parsed.important_factors;
                    row.answer_position = to_string(parsed.answer_position);
                    if (config_.explanation_source == ExplanationSource::reasoning_trace &&
                        !transcript.reasoning_trace.empty()) {
                        row.explanation = transcript.reasoning_trace;
                        row.used_reasoning_trace = true;
                    }
                } catch (const ParseError& e) {
                    row.parse_ok = false;
                    row.error = e.what();
                }
                rows[i] = std::move(row);
            });

            std::vector<json> out;
            out.reserve(rows.size());
            std::size_t failures = 0;
            for (const auto& r : rows) {
                failures += !r.parse_ok;
                out.push_back(reference_row_to_json(r));
            }
            write_jsonl(reference_file(model.model_id), out);
            counts[model.model_id] = json{{"calls", tasks.size()},
                                          {"cache_hits", cache_hits.load()},
                                          {"parse_failures", failures}};
        }
        return counts;
    }

    // ----- phase: predictor ------------------------------------------------

    struct PredictorTask {
        const CounterfactualPair* pair;
        std::string dataset_id;
        const ModelSpec* reference;
        const ModelSpec* explainer;  // == reference for self-explanations
        const ModelSpec* predictor;
        PredictorCondition condition;
        std::string actual;
        bool answer_matched = true;
    };

    json phase_predictor() {
        // Parsed reference outputs, keyed (model, record, salt=0).
        std::map<std::string, std::map<std::string, ReferenceOutputRow>> ref_rows;
        for (const auto& model : config_.reference_models) {
            auto& slot = ref_rows[model.model_id];
            for_each_jsonl(reference_file(model.model_id), [&](json&& j) {
                ReferenceOutputRow row = reference_row_from_json(j);
                if (row.salt == 0) slot.emplace(row.record_id, std::move(row));
            });
        }
        std::map<std::string, std::map<std::string, std::string>> questions;
        std::map<std::string, std::vector<CounterfactualPair>> pairs;
        for (const auto& ds : config_.datasets) {
            questions[ds.id] = load_questions(ds.id);
            pairs[ds.id] = load_pairs(ds.id);
        }

        std::vector<PredictorTask> tasks;
        std::size_t pairs_excluded_reference_parse = 0;
        std::size_t cross_candidates_unmatched = 0;
        for (const auto& ds : config_.datasets) {
            for (const auto& pair : pairs.at(ds.id)) {
                for (const auto& reference : config_.reference_models) {
                    const auto& slot = ref_rows.at(reference.model_id);
                    auto fact = slot.find(pair.factual_id);
                    auto cf = slot.find(pair.counterfactual_id);
                    if (fact == slot.end() || cf == slot.end() || !fact->second.parse_ok ||
                        !cf->second.parse_ok) {
                        ++pairs_excluded_reference_parse;
                        continue;
                    }
                    for (const auto condition : config_.conditions) {
                        for (const auto& predictor : config_.predictor_models) {
                            tasks.push_back({&pair, ds.id, &reference, &reference, &predictor,
                                             condition, cf->second.answer, true});
                        }
                        if (config_.cross_model &&
                            condition == PredictorCondition::with_explanation) {
                            for (const auto& explainer : config_.reference_models) {
                                if (explainer.model_id == reference.model_id) continue;
                                if (explainer.family == reference.family) continue;
                                auto efact = ref_rows.at(explainer.model_id)
                                                 .find(pair.factual_id);
                                if (efact == ref_rows.at(explainer.model_id).end() ||
                                    !efact->second.parse_ok) {
                                    continue;
                                }
                                if (efact->second.answer != fact->second.answer) {
                                    ++cross_candidates_unmatched;
                                    continue;
                                }
                                for (const auto& predictor : config_.predictor_models) {
                                    tasks.push_back({&pair, ds.id, &reference, &explainer,
                                                     &predictor, condition, cf->second.answer,
                                                     true});
                                }
                            }
                        }
                    }
                }
            }
        }

        const int workers = config_.all_simulated() ? 1 : config_.parallelism;
        std::vector<std::optional<PredictionRow>> results(tasks.size());
        std::atomic<std::size_t> parse_failures{0};
        detail::parallel_for(tasks.size(), workers, [&](std::size_t i) {
            const auto& task = tasks[i];
            const auto& cfg = dataset_config(task.dataset_id);
            const auto& explainer_row =
                ref_rows.at(task.explainer->model_id).at(task.pair->factual_id);

            PredictorPromptSpec spec;
            spec.condition = task.condition;
            spec.vocabulary = cfg.vocabulary;
            spec.framing = cfg.predictor;
            spec.explanation_source = config_.explanation_source;
            spec.counterfactual_question =
                questions.at(task.dataset_id).at(task.pair->counterfactual_id);
            if (task.condition != PredictorCondition::no_information) {
                spec.factual_question =
                    questions.at(task.dataset_id).at(task.pair->factual_id);
                spec.reference_answer =
                    ref_rows.at(task.reference->model_id).at(task.pair->factual_id).answer;
                if (task.condition == PredictorCondition::with_explanation) {
                    spec.explanation = explainer_row.explanation;
                    spec.important_factors = explainer_row.factors;
                }
            }
            const std::string prompt = build_predictor_prompt(spec);

            CallContext context;
            context.vocabulary = &cfg.vocabulary;
            context.sim_seed = model_sim_seed(task.predictor->model_id);
            const auto transcript = gateway_->complete(*task.predictor, prompt, context);

            PredictionRow row;
            row.reference_model = task.reference->model_id;
            row.reference_family = task.reference->family;
            row.predictor_model = task.predictor->model_id;
            row.predictor_family = task.predictor->family;
            row.dataset_id = task.dataset_id;
            row.pair_id = task.pair->pair_id;
            row.condition = task.condition;
            row.actual = task.actual;
            row.changed = task.pair->changed;
            row.explainer_model = task.explainer->model_id;
            row.explainer_family = task.explainer->family;
            row.answer_matched = task.answer_matched;
            row.dimension = task.pair->dimension;
            try {
                const auto parsed = parse_prediction(transcript.raw_output, cfg.vocabulary);
                row.predicted = parsed.predicted;
                row.correct = row.predicted == row.actual;
                results[i] = std::move(row);
            } catch (const ParseError&) {
                parse_failures.fetch_add(1);
            }
        });

        PredictionTable table;
        table.reserve(tasks.size());
        for (auto& result : results) {
            if (result) table.push_back(std::move(*result));
        }
        save_prediction_table(config_.output_dir / "tables" / "predictions.jsonl", table);
        return json{{"rows", table.size()},
                    {"tasks", tasks.size()},
                    {"prediction_parse_failures", parse_failures.load()},
                    {"pairs_excluded_reference_parse", pairs_excluded_reference_parse},
                    {"cross_candidates_unmatched", cross_candidates_unmatched}};
    }

    // ----- phase: metrics ---------------------------------------------------

    json phase_metrics() {
        const auto table =
            load_prediction_table(config_.output_dir / "tables" / "predictions.jsonl");

        RolloutLabels rollouts;
        if (config_.rollouts_per_counterfactual > 1) {
            for (const auto& ds : config_.datasets) {
                const auto ds_pairs = load_pairs(ds.id);
                for (const auto& model : config_.reference_models) {
                    std::map<std::pair<std::string, std::uint64_t>, ReferenceOutputRow> by_key;
                    for_each_jsonl(reference_file(model.model_id), [&](json&& j) {
                        ReferenceOutputRow row = reference_row_from_json(j);
                        by_key.emplace(std::make_pair(row.record_id, row.salt), std::move(row));
                    });
                    for (const auto& pair : ds_pairs) {
                        std::vector<std::string> labels;
                        bool ok = true;
                        for (int salt = 0; salt < config_.rollouts_per_counterfactual; ++salt) {
                            auto it = by_key.find(
                                {pair.counterfactual_id, static_cast<std::uint64_t>(salt)});
                            if (it == by_key.end() || !it->second.parse_ok) {
                                ok = false;
                                break;
                            }
                            labels.push_back(it->second.answer);
                        }
                        if (ok) rollouts[model.model_id][pair.pair_id] = std::move(labels);
                    }
                }
            }
        }

        ReportOptions options;
        options.bootstrap.iterations = config_.bootstrap_iterations;
        options.bootstrap.seed = config_.seed;
        options.min_rr_samples = config_.min_rr_samples;
        options.strict_egregious = config_.strict_egregious;

        const RunManifest manifest = load_manifest(config_.output_dir);
        json model_info = json::array();
        for (const auto& m : config_.reference_models) {
            json entry{{"model_id", m.model_id},
                       {"family", m.family},
                       {"role", "reference"},
                       {"kind", m.kind == ModelKind::remote ? "remote" : "simulated"}};
            if (m.kind == ModelKind::remote) {
                entry["temperature"] = m.endpoint.temperature < 0
                                           ? json("provider_default")
                                           : json(m.endpoint.temperature);
                entry["reasoning_strength"] = to_string(m.endpoint.reasoning_strength);
            }
            model_info.push_back(std::move(entry));
        }
        for (const auto& m : config_.predictor_models) {
            model_info.push_back(json{{"model_id", m.model_id},
                                      {"family", m.family},
                                      {"role", "predictor"},
                                      {"kind", m.kind == ModelKind::remote ? "remote"
                                                                           : "simulated"}});
        }
        json metadata{{"seed", config_.seed},
                      {"config_digest", digest_},
                      {"tool_version", kToolVersion},
                      {"explanation_source",
                       config_.explanation_source == ExplanationSource::reasoning_trace
                           ? "reasoning_trace"
                           : "user_facing"},
                      {"models", model_info}};
        for (const char* phase : {"generate", "reference", "predictor"}) {
            auto it = manifest.phases.find(phase);
            if (it != manifest.phases.end()) metadata["phase_counts"][phase] = it->second.counts;
        }

        const json report = compute_metric_report(table, rollouts, options, metadata);
        write_json_file(config_.output_dir / "report" / "metrics.json", report);
        write_report_tables(report, config_.output_dir / "tables");
        return json{{"rows", table.size()},
                    {"reference_models", report["per_reference_model"].size()},
                    {"datasets", report["per_dataset"].size()}};
    }

    // ----- phase: report ----------------------------------------------------

    json phase_report() {
        const json report = read_json_file(config_.output_dir / "report" / "metrics.json");
        std::string text;
        char line[256];

        auto pct = [](const json& stat) -> std::string {
            if (!stat.value("defined", false)) return "   n/a";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%6.2f", stat["value"].get<double>() * 100.0);
            return buf;
        };
        auto ci = [](const json& stat) -> std::string {
            if (!stat.value("defined", false)) return "";
            char buf[64];
            std::snprintf(buf, sizeof(buf), " [%.2f, %.2f]", stat["ci_lo"].get<double>() * 100.0,
                          stat["ci_hi"].get<double>() * 100.0);
            return buf;
        };

        text += "Normalized Simulatability Gain report\n";
        text += "=====================================\n\n";
        const auto& overall = report["overall"];
        std::snprintf(line, sizeof(line),
                      "Overall: acc_without %s%%  acc_with %s%%  gain %s%%%s  NSG %s%%%s\n\n",
                      pct(overall["acc_without"]).c_str(), pct(overall["acc_with"]).c_str(),
                      pct(overall["gain"]).c_str(), ci(overall["gain"]).c_str(),
                      pct(overall["nsg"]).c_str(), ci(overall["nsg"]).c_str());
        text += line;

        text += "Per reference model (accuracies and NSG in %):\n";
        for (const auto& row : report["per_reference_model"]) {
            std::snprintf(line, sizeof(line), "  %-28s w/o %s  w/ %s  gain %s%s  NSG %s%s\n",
                          row["model"].get<std::string>().c_str(),
                          pct(row["acc_without"]).c_str(), pct(row["acc_with"]).c_str(),
                          pct(row["gain"]).c_str(), ci(row["gain"]).c_str(),
                          pct(row["nsg"]).c_str(), ci(row["nsg"]).c_str());
            text += line;
            const auto& egregious = row["egregious"];
            if (egregious.contains("rate") && !egregious["rate"].is_null()) {
                std::snprintf(line, sizeof(line),
                              "  %-28s egregious %.2f%% [%.2f, %.2f] over %zu pairs "
                              "(%zu skipped)\n",
                              "", egregious["rate"].get<double>() * 100.0,
                              egregious["ci_lo"].get<double>() * 100.0,
                              egregious["ci_hi"].get<double>() * 100.0,
                              egregious["pairs"].get<std::size_t>(),
                              egregious["skipped_pairs"].get<std::size_t>());
                text += line;
            }
        }

        text += "\nPer dataset:\n";
        for (const auto& row : report["per_dataset"]) {
            std::snprintf(line, sizeof(line), "  %-20s w/o %s  w/ %s  NSG %s%s\n",
                          row["dataset"].get<std::string>().c_str(),
                          pct(row["acc_without"]).c_str(), pct(row["acc_with"]).c_str(),
                          pct(row["nsg"]).c_str(), ci(row["nsg"]).c_str());
            text += line;
        }

        if (report.contains("cross_model")) {
            text += "\nSelf vs cross-model explanations (per family):\n";
            for (const auto& row : report["cross_model"]["per_family"]) {
                std::snprintf(line, sizeof(line),
                              "  %-16s NSG_same %6.2f%%  NSG_cross %6.2f%%  uplift %+.2fpp "
                              "[%+.2f, %+.2f]\n",
                              row["family"].get<std::string>().c_str(),
                              row["nsg_same"].get<double>() * 100.0,
                              row["nsg_cross"].get<double>() * 100.0,
                              row["uplift"].get<double>() * 100.0,
                              row["uplift_ci_lo"].get<double>() * 100.0,
                              row["uplift_ci_hi"].get<double>() * 100.0);
                text += line;
            }
        }

        if (report.contains("consistency")) {
            text += "\nConsistency ceilings (oracle predictor on modal responses):\n";
            for (const auto& row : report["consistency"]) {
                std::snprintf(line, sizeof(line), "  %-28s ceiling %.2f%% over %zu pairs\n",
                              row["model"].get<std::string>().c_str(),
                              row["ceiling"].get<double>() * 100.0,
                              row["pairs"].get<std::size_t>());
                text += line;
            }
        }

        if (report.contains("kendalls_w")) {
            std::snprintf(line, sizeof(line),
                          "\nKendall's W over predictor rankings of reference models: %.3f\n",
                          report["kendalls_w"]["value"].get<double>());
            text += line;
        }

        const auto path = config_.output_dir / "report" / "summary.txt";
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::trunc);
        out << text;
        return json{{"summary", "report/summary.txt"}};
    }

    ExperimentConfig config_;
    std::string digest_;
    std::unique_ptr<ModelGateway> gateway_;
    std::map<std::string, DatasetConfig> dataset_configs_;
};

}  // namespace nsg
