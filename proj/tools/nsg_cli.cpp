// nsg: batch evaluation of explanation faithfulness via Normalized
// Simulatability Gain. Runs a declarative experiment config through the
// phased pipeline (generate -> reference -> predict -> metrics -> report).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "nsg/dataset/synthetic.hpp"
#include "nsg/run/pipeline.hpp"

namespace {

struct PhaseCommandOptions {
    std::string config_file;
    std::string output_dir;
    bool phase_only = true;
    bool resume = true;
};

struct GenerateOverrides {
    std::string dataset;
    int r = 0;
    int m = 0;
    double epsilon = -1.0;
    int n = 0;
    long long seed = -1;
};

nsg::ExperimentConfig load_config(const PhaseCommandOptions& options,
                                  const GenerateOverrides* overrides) {
    nsg::json doc = nsg::read_json_file(options.config_file);
    if (!options.output_dir.empty()) doc["output_dir"] = options.output_dir;
    if (overrides) {
        if (!overrides->dataset.empty()) {
            nsg::json filtered = nsg::json::array();
            for (const auto& ds : doc.at("datasets")) {
                if (ds.at("id").get<std::string>() == overrides->dataset) filtered.push_back(ds);
            }
            if (filtered.empty()) {
                throw nsg::ValidationError("dataset '" + overrides->dataset +
                                           "' is not in the config");
            }
            doc["datasets"] = filtered;
        }
        if (!doc.contains("generation")) doc["generation"] = nsg::json::object();
        if (overrides->r > 0) doc["generation"]["max_distance"] = overrides->r;
        if (overrides->m > 0) doc["generation"]["min_ball_size"] = overrides->m;
        if (overrides->epsilon >= 0.0) doc["generation"]["balance_tolerance"] = overrides->epsilon;
        if (overrides->n > 0) doc["generation"]["pairs_per_dataset"] = overrides->n;
        if (overrides->seed >= 0) doc["seed"] = static_cast<std::uint64_t>(overrides->seed);
    }
    auto config = nsg::parse_experiment_config(doc);
    nsg::validate_experiment_config(config);
    return config;
}

void print_counts(const char* phase, const nsg::json& counts) {
    if (counts.value("no_op", false)) {
        std::printf("[%s] already complete under this config; nothing to do\n", phase);
    } else {
        std::printf("[%s] done: %s\n", phase, counts.dump().c_str());
    }
}

int run_one_phase(const PhaseCommandOptions& options, nsg::Phase phase,
                  const GenerateOverrides* overrides = nullptr) {
    auto config = load_config(options, overrides);
    nsg::Pipeline pipeline(std::move(config));
    const auto counts = pipeline.run_phase(phase);
    print_counts(nsg::phase_name(phase), counts);
    return 0;
}

int run_all(const PhaseCommandOptions& options) {
    auto config = load_config(options, nullptr);
    nsg::Pipeline pipeline(std::move(config));
    for (nsg::Phase phase : {nsg::Phase::generate, nsg::Phase::reference, nsg::Phase::predictor,
                             nsg::Phase::metrics, nsg::Phase::report}) {
        const auto counts = pipeline.run_phase(phase);
        print_counts(nsg::phase_name(phase), counts);
    }
    std::printf("report: %s\n",
                (pipeline.run_dir() / "report" / "metrics.json").string().c_str());
    std::printf("summary: %s\n",
                (pipeline.run_dir() / "report" / "summary.txt").string().c_str());
    return 0;
}

void add_common_options(CLI::App* cmd, PhaseCommandOptions& options) {
    cmd->add_option("--config", options.config_file, "Experiment config file (JSON)")
        ->required();
    cmd->add_option("--output-dir", options.output_dir,
                    "Override the config's output directory");
    cmd->add_flag("--phase-only", options.phase_only,
                  "Run only this phase; refuse if prerequisites are missing (default)");
    cmd->add_flag("--resume", options.resume,
                  "Resume from cached transcripts and completed markers (default)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Faithfulness evaluation via Normalized Simulatability Gain"};
    app.require_subcommand(1);

    PhaseCommandOptions options;
    GenerateOverrides overrides;

    auto* generate = app.add_subcommand(
        "generate", "Ingest datasets and build counterfactual pair manifests");
    add_common_options(generate, options);
    generate->add_option("--dataset", overrides.dataset, "Restrict to one dataset id");
    generate->add_option("--r", overrides.r, "Max Hamming distance");
    generate->add_option("--m", overrides.m, "Minimum ball size");
    generate->add_option("--epsilon", overrides.epsilon, "Balance tolerance");
    generate->add_option("--n", overrides.n, "Pairs per dataset");
    generate->add_option("--seed", overrides.seed, "Generation seed");

    auto* reference = app.add_subcommand(
        "reference", "Collect reference model answers and explanations");
    add_common_options(reference, options);
    auto* predict = app.add_subcommand(
        "predict", "Collect predictor responses under the enabled conditions");
    add_common_options(predict, options);
    auto* metrics = app.add_subcommand("metrics", "Compute the metric report and CSV tables");
    add_common_options(metrics, options);
    auto* report = app.add_subcommand("report", "Render the human-readable summary");
    add_common_options(report, options);
    auto* run = app.add_subcommand("run", "Run every phase in order");
    add_common_options(run, options);

    std::string synth_dataset, synth_out;
    std::string synth_config_dir = nsg::default_config_dir().string();
    int synth_rows = 2000;
    long long synth_seed = 1;
    auto* synth = app.add_subcommand(
        "synth-data", "Write a synthetic raw CSV for a tabular dataset config");
    synth->add_option("--dataset", synth_dataset, "Dataset id")->required();
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--rows", synth_rows, "Row count");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--config-dir", synth_config_dir, "Dataset config directory root");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto cfg = nsg::load_dataset_config_by_id(synth_dataset, synth_config_dir);
            nsg::write_synthetic_table(cfg, synth_out, synth_rows,
                                       static_cast<std::uint64_t>(synth_seed));
            std::printf("wrote %d synthetic rows for '%s' to %s\n", synth_rows,
                        synth_dataset.c_str(), synth_out.c_str());
            return 0;
        }
        if (generate->parsed()) return run_one_phase(options, nsg::Phase::generate, &overrides);
        if (reference->parsed()) return run_one_phase(options, nsg::Phase::reference);
        if (predict->parsed()) return run_one_phase(options, nsg::Phase::predictor);
        if (metrics->parsed()) return run_one_phase(options, nsg::Phase::metrics);
        if (report->parsed()) return run_one_phase(options, nsg::Phase::report);
        if (run->parsed()) return run_all(options);
    } catch (const nsg::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const nsg::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nsg::TransportError& e) {
        std::fprintf(stderr, "transport error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
