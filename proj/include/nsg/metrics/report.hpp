#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nsg/jsonl.hpp"
#include "nsg/metrics/accuracy.hpp"
#include "nsg/metrics/bootstrap.hpp"
#include "nsg/metrics/concordance.hpp"
#include "nsg/metrics/consistency.hpp"
#include "nsg/metrics/cross_model.hpp"
#include "nsg/metrics/egregious.hpp"
#include "nsg/metrics/prediction_table.hpp"

namespace nsg {

struct ReportOptions {
    BootstrapParams bootstrap;
    std::size_t min_rr_samples = kDefaultRRMinSamples;
    bool strict_egregious = false;  // also require all-correct baseline
};

// Rollouts of the counterfactual-side reference calls, for the consistency
// ceiling: model -> pair -> one label per rollout. The evaluation answer is
// the first rollout (salt 0).
using RolloutLabels = std::map<std::string, std::map<std::string, std::vector<std::string>>>;

namespace detail {

// Per-pair, per-predictor, per-condition tallies over the self-explanation
// rows of one slice, flattened for the bootstrap inner loop.
class AccuracyAggregator {
public:
    AccuracyAggregator(const PredictionTable& table, const std::string& reference_filter,
                       const std::string& dataset_filter,
                       const std::string& predictor_filter = {}) {
        std::map<std::string, std::uint32_t> pair_index;
        std::map<std::string, std::uint32_t> predictor_index;
        for (const auto& row : table) {
            if (!row.is_self_explanation()) continue;
            if (!reference_filter.empty() && row.reference_model != reference_filter) continue;
            if (!dataset_filter.empty() && row.dataset_id != dataset_filter) continue;
            if (!predictor_filter.empty() && row.predictor_model != predictor_filter) continue;
            pair_index.emplace(row.pair_id, 0);
            predictor_index.emplace(row.predictor_model, 0);
        }
        pairs_.reserve(pair_index.size());
        for (auto& [id, idx] : pair_index) {
            idx = static_cast<std::uint32_t>(pairs_.size());
            pairs_.push_back(id);
        }
        predictors_.reserve(predictor_index.size());
        for (auto& [id, idx] : predictor_index) {
            idx = static_cast<std::uint32_t>(predictors_.size());
            predictors_.push_back(id);
        }
        tallies_.assign(pairs_.size() * predictors_.size() * 3, {0, 0});
        for (const auto& row : table) {
            if (!row.is_self_explanation()) continue;
            if (!reference_filter.empty() && row.reference_model != reference_filter) continue;
            if (!dataset_filter.empty() && row.dataset_id != dataset_filter) continue;
            if (!predictor_filter.empty() && row.predictor_model != predictor_filter) continue;
            auto& cell = tallies_[offset(pair_index.at(row.pair_id),
                                         predictor_index.at(row.predictor_model),
                                         static_cast<int>(row.condition))];
            cell.first += row.correct;
            cell.second += 1;
        }
    }

    bool has_condition(PredictorCondition c) const {
        const int idx = static_cast<int>(c);
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            for (std::size_t k = 0; k < predictors_.size(); ++k) {
                if (tallies_[offset(static_cast<std::uint32_t>(p),
                                    static_cast<std::uint32_t>(k), idx)]
                        .second > 0) {
                    return true;
                }
            }
        }
        return false;
    }

    std::size_t pair_count() const { return pairs_.size(); }
    const std::vector<std::string>& pairs() const { return pairs_; }

    // Ensemble accuracy over a multiset of pair indices: unweighted mean of
    // per-predictor accuracies.
    double accuracy(const std::vector<std::uint32_t>& chosen, PredictorCondition c) const {
        const int idx = static_cast<int>(c);
        double sum = 0.0;
        int used = 0;
        for (std::uint32_t k = 0; k < predictors_.size(); ++k) {
            double correct = 0, total = 0;
            for (std::uint32_t p : chosen) {
                const auto& cell = tallies_[offset(p, k, idx)];
                correct += cell.first;
                total += cell.second;
            }
            if (total > 0) {
                sum += correct / total;
                ++used;
            }
        }
        return used > 0 ? sum / used : std::nan("");
    }

private:
    std::size_t offset(std::uint32_t pair, std::uint32_t predictor, int condition) const {
        return (static_cast<std::size_t>(pair) * predictors_.size() + predictor) * 3 +
               static_cast<std::size_t>(condition);
    }

    std::vector<std::string> pairs_;
    std::vector<std::string> predictors_;
    std::vector<std::pair<std::uint16_t, std::uint16_t>> tallies_;
};

struct StatWithCi {
    double value = std::nan("");
    ConfidenceInterval ci;
    bool defined = false;
};

inline json stat_json(const StatWithCi& s) {
    if (!s.defined || std::isnan(s.value)) return json{{"defined", false}};
    return json{{"defined", true}, {"value", s.value}, {"ci_lo", s.ci.lo}, {"ci_hi", s.ci.hi}};
}

struct AccuracyBlock {
    StatWithCi acc_without, acc_with, acc_noinfo, gain, nsg_value;
    std::size_t pairs = 0;
};

// One bootstrap pass computing all block statistics per resample.
inline AccuracyBlock accuracy_block(const AccuracyAggregator& agg,
                                    const BootstrapParams& params) {
    AccuracyBlock block;
    block.pairs = agg.pair_count();
    if (agg.pair_count() == 0) return block;

    const bool have_base = agg.has_condition(PredictorCondition::baseline);
    const bool have_with = agg.has_condition(PredictorCondition::with_explanation);
    const bool have_noinfo = agg.has_condition(PredictorCondition::no_information);

    std::vector<std::uint32_t> all(agg.pair_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);

    struct Values {
        double base, with, noinfo, gain, nsg;
    };
    auto eval = [&](const std::vector<std::uint32_t>& chosen) {
        Values v{std::nan(""), std::nan(""), std::nan(""), std::nan(""), std::nan("")};
        if (have_base) v.base = agg.accuracy(chosen, PredictorCondition::baseline);
        if (have_with) v.with = agg.accuracy(chosen, PredictorCondition::with_explanation);
        if (have_noinfo) v.noinfo = agg.accuracy(chosen, PredictorCondition::no_information);
        if (have_base && have_with) {
            v.gain = v.with - v.base;
            if (v.base < 1.0) v.nsg = (v.with - v.base) / (1.0 - v.base);
        }
        return v;
    };

    const Values point = eval(all);
    std::vector<double> base_s, with_s, noinfo_s, gain_s, nsg_s;
    const int iterations = agg.pair_count() > 1 ? params.iterations : 0;
    std::vector<std::uint32_t> chosen(agg.pair_count());
    for (int it = 0; it < iterations; ++it) {
        Rng rng = derive_stream(params.seed, "bootstrap", static_cast<std::uint64_t>(it));
        for (auto& c : chosen) c = static_cast<std::uint32_t>(rng.below(agg.pair_count()));
        const Values v = eval(chosen);
        if (!std::isnan(v.base)) base_s.push_back(v.base);
        if (!std::isnan(v.with)) with_s.push_back(v.with);
        if (!std::isnan(v.noinfo)) noinfo_s.push_back(v.noinfo);
        if (!std::isnan(v.gain)) gain_s.push_back(v.gain);
        if (!std::isnan(v.nsg)) nsg_s.push_back(v.nsg);
    }

    const double alpha = (1.0 - params.level) / 2.0;
    auto finish = [&](double value, std::vector<double>& samples) {
        StatWithCi s;
        if (std::isnan(value)) return s;
        s.defined = true;
        s.value = value;
        if (samples.empty()) {
            s.ci = {value, value, true};
        } else {
            std::sort(samples.begin(), samples.end());
            s.ci.lo = percentile_sorted(samples, alpha);
            s.ci.hi = percentile_sorted(samples, 1.0 - alpha);
            s.ci.degenerate = samples.front() == samples.back();
        }
        return s;
    };
    block.acc_without = finish(point.base, base_s);
    block.acc_with = finish(point.with, with_s);
    block.acc_noinfo = finish(point.noinfo, noinfo_s);
    block.gain = finish(point.gain, gain_s);
    block.nsg_value = finish(point.nsg, nsg_s);
    return block;
}

inline json accuracy_block_json(const AccuracyBlock& block) {
    return json{{"pairs", block.pairs},
                {"acc_without", stat_json(block.acc_without)},
                {"acc_with", stat_json(block.acc_with)},
                {"acc_no_information", stat_json(block.acc_noinfo)},
                {"gain", stat_json(block.gain)},
                {"nsg", stat_json(block.nsg_value)}};
}

inline std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

// Computes the full metric report from a prediction table. The result is a
// single machine-readable JSON document; write_report_tables renders the
// flat per-figure CSVs next to it.
inline json compute_metric_report(const PredictionTable& table, const RolloutLabels& rollouts,
                                  const ReportOptions& options, const json& metadata = {}) {
    if (table.empty()) throw MetricsError("cannot report on an empty prediction table");

    std::set<std::string> reference_models, datasets, predictors;
    bool any_cross = false;
    for (const auto& row : table) {
        reference_models.insert(row.reference_model);
        datasets.insert(row.dataset_id);
        predictors.insert(row.predictor_model);
        any_cross |= !row.is_self_explanation();
    }

    json report;
    report["schema_version"] = 1;

    {
        detail::AccuracyAggregator agg(table, "", "");
        report["overall"] = detail::accuracy_block_json(
            detail::accuracy_block(agg, options.bootstrap));
    }

    // Per reference model: headline metrics plus egregious unfaithfulness.
    report["per_reference_model"] = json::array();
    std::map<std::string, EgregiousFlags> flags_by_model;
    for (const auto& model : reference_models) {
        detail::AccuracyAggregator agg(table, model, "");
        json entry = detail::accuracy_block_json(detail::accuracy_block(agg, options.bootstrap));
        entry["model"] = model;
        for (const auto& row : table) {
            if (row.reference_model == model) {
                entry["family"] = row.reference_family;
                break;
            }
        }
        try {
            const auto flags = egregious_flags(table, model, options.strict_egregious);
            flags_by_model.emplace(model, flags);
            const double rate = egregious_rate(flags);
            std::vector<char> flat;
            flat.reserve(flags.by_pair.size());
            for (const auto& [_, f] : flags.by_pair) flat.push_back(f);
            auto stat = [&](const std::vector<std::uint32_t>& chosen) {
                double sum = 0;
                for (auto c : chosen) sum += flat[c];
                return sum / static_cast<double>(chosen.size());
            };
            const auto ci = clustered_bootstrap_ci(flat.size(), stat, options.bootstrap);
            entry["egregious"] = json{{"rate", rate},
                                      {"ci_lo", ci.lo},
                                      {"ci_hi", ci.hi},
                                      {"pairs", flags.by_pair.size()},
                                      {"skipped_pairs", flags.skipped_pairs}};
        } catch (const MetricsError&) {
            entry["egregious"] = json{{"rate", nullptr}};
        }
        report["per_reference_model"].push_back(std::move(entry));
    }

    report["per_dataset"] = json::array();
    for (const auto& dataset : datasets) {
        detail::AccuracyAggregator agg(table, "", dataset);
        json entry = detail::accuracy_block_json(detail::accuracy_block(agg, options.bootstrap));
        entry["dataset"] = dataset;
        report["per_dataset"].push_back(std::move(entry));
    }

    // Feature-level relative risk of egregious unfaithfulness, pooled over
    // reference models, one block per dataset.
    report["relative_risk"] = json::array();
    {
        std::map<std::string, std::pair<std::vector<std::string>, std::string>> pair_info;
        for (const auto& row : table) {
            auto& info = pair_info[row.pair_id];
            info.first = row.changed;
            info.second = row.dataset_id;
        }
        for (const auto& dataset : datasets) {
            std::set<std::string> features;
            for (const auto& [pair_id, info] : pair_info) {
                if (info.second != dataset) continue;
                for (const auto& f : info.first) features.insert(f);
            }
            for (const auto& feature : features) {
                std::vector<RRObservation> obs;
                for (const auto& [model, flags] : flags_by_model) {
                    for (const auto& [pair_id, flagged] : flags.by_pair) {
                        const auto& info = pair_info.at(pair_id);
                        if (info.second != dataset) continue;
                        const bool changed =
                            std::find(info.first.begin(), info.first.end(), feature) !=
                            info.first.end();
                        obs.push_back({flagged, changed});
                    }
                }
                if (obs.empty()) continue;
                json entry{{"dataset", dataset}, {"feature", feature}};
                try {
                    const auto rr = relative_risk(obs, options.min_rr_samples,
                                                  options.bootstrap);
                    if (rr.excluded) {
                        entry["status"] = "excluded";
                        entry["n_changed"] = rr.n_changed;
                    } else {
                        entry["status"] = rr.infinite ? "infinite" : "ok";
                        entry["rr"] = rr.infinite ? json(nullptr) : json(rr.rr);
                        entry["ci_lo"] = std::isfinite(rr.ci.lo) ? json(rr.ci.lo) : json(nullptr);
                        entry["ci_hi"] = std::isfinite(rr.ci.hi) ? json(rr.ci.hi) : json(nullptr);
                        entry["n_changed"] = rr.n_changed;
                        entry["n_unchanged"] = rr.n_unchanged;
                    }
                } catch (const MetricsError& e) {
                    entry["status"] = "error";
                    entry["note"] = e.what();
                }
                report["relative_risk"].push_back(std::move(entry));
            }
        }
    }

    // Scenario-dimension relative risk over the procedurally generated pairs.
    {
        std::map<std::string, std::string> dimension_of;
        for (const auto& row : table) {
            if (!row.dimension.empty()) dimension_of[row.pair_id] = row.dimension;
        }
        std::set<std::string> dims;
        for (const auto& [_, d] : dimension_of) dims.insert(d);
        if (dims.size() >= 2) {
            std::vector<std::pair<bool, std::string>> obs;
            for (const auto& [model, flags] : flags_by_model) {
                for (const auto& [pair_id, flagged] : flags.by_pair) {
                    auto it = dimension_of.find(pair_id);
                    if (it != dimension_of.end()) obs.push_back({flagged, it->second});
                }
            }
            if (!obs.empty()) {
                report["dimension_relative_risk"] = json::array();
                const auto by_dim =
                    dimension_relative_risk(obs, options.min_rr_samples, options.bootstrap);
                for (const auto& [dim, rr] : by_dim) {
                    json entry{{"dimension", dim}};
                    if (rr.excluded) {
                        entry["status"] = "excluded";
                        entry["n_changed"] = rr.n_changed;
                    } else {
                        entry["status"] = rr.infinite ? "infinite" : "ok";
                        entry["rr"] = rr.infinite ? json(nullptr) : json(rr.rr);
                        entry["ci_lo"] = std::isfinite(rr.ci.lo) ? json(rr.ci.lo) : json(nullptr);
                        entry["ci_hi"] = std::isfinite(rr.ci.hi) ? json(rr.ci.hi) : json(nullptr);
                    }
                    report["dimension_relative_risk"].push_back(std::move(entry));
                }
            }
        }
    }

    if (any_cross) {
        const auto cross = cross_model_metrics(table, options.bootstrap);
        json per_model = json::array();
        for (const auto& m : cross.per_model) {
            per_model.push_back(json{{"model", m.model},
                                     {"family", m.family},
                                     {"acc_same", m.acc_same},
                                     {"acc_cross", m.acc_cross},
                                     {"acc_baseline", m.acc_baseline},
                                     {"nsg_same", m.nsg_same},
                                     {"nsg_cross", m.nsg_cross},
                                     {"uplift", m.uplift},
                                     {"questions_used", m.questions_used},
                                     {"questions_excluded", m.questions_excluded}});
        }
        json per_family = json::array();
        for (const auto& f : cross.per_family) {
            per_family.push_back(json{{"family", f.family},
                                      {"acc_same", f.acc_same},
                                      {"acc_cross", f.acc_cross},
                                      {"acc_baseline", f.acc_baseline},
                                      {"nsg_same", f.nsg_same},
                                      {"nsg_cross", f.nsg_cross},
                                      {"uplift", f.uplift},
                                      {"uplift_ci_lo", f.uplift_ci.lo},
                                      {"uplift_ci_hi", f.uplift_ci.hi}});
        }
        report["cross_model"] = json{{"per_model", per_model}, {"per_family", per_family}};
    }

    if (!rollouts.empty()) {
        report["consistency"] = json::array();
        for (const auto& [model, by_pair] : rollouts) {
            std::map<std::string, std::vector<std::string>> labels;
            std::map<std::string, std::string> eval;
            for (const auto& [pair_id, rolls] : by_pair) {
                if (rolls.size() < 2) continue;
                labels[pair_id] = rolls;
                eval[pair_id] = rolls.front();
            }
            if (labels.empty()) continue;
            const auto ceiling = consistency_ceiling(labels, eval);
            report["consistency"].push_back(json{{"model", model},
                                                 {"ceiling", ceiling.ceiling},
                                                 {"ties_broken", ceiling.ties_broken},
                                                 {"pairs", ceiling.pairs}});
        }
    }

    // Rank agreement across the predictor ensemble: each predictor ranks the
    // reference models by its own NSG value.
    if (predictors.size() >= 2 && reference_models.size() >= 2) {
        std::vector<std::vector<double>> scores;
        bool complete = true;
        for (const auto& predictor : predictors) {
            std::vector<double> per_model;
            for (const auto& model : reference_models) {
                detail::AccuracyAggregator agg(table, model, "", predictor);
                BootstrapParams no_boot;
                no_boot.iterations = 0;
                const auto block = detail::accuracy_block(agg, no_boot);
                if (!block.nsg_value.defined) {
                    complete = false;
                    break;
                }
                per_model.push_back(block.nsg_value.value);
            }
            if (!complete) break;
            scores.push_back(std::move(per_model));
        }
        if (complete) {
            report["kendalls_w"] = json{{"value", kendalls_w_from_scores(scores)},
                                        {"raters", predictors.size()},
                                        {"items", reference_models.size()}};
        }
    }

    report["metadata"] = metadata.is_null() ? json::object() : metadata;
    return report;
}

// Flat CSV tables, one per figure-equivalent.
inline void write_report_tables(const json& report, const std::filesystem::path& tables_dir) {
    namespace d = detail;
    std::filesystem::create_directories(tables_dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(tables_dir / name, std::ios::trunc);
        if (!out) throw IngestError("cannot write " + (tables_dir / name).string());
        return out;
    };
    auto stat_cols = [](const json& s) -> std::string {
        if (!s.value("defined", false)) return ",,";
        return d::csv_num(s["value"].get<double>()) + "," + d::csv_num(s["ci_lo"].get<double>()) +
               "," + d::csv_num(s["ci_hi"].get<double>());
    };

    {
        auto out = open("main_results.csv");
        out << "model,family,acc_without,acc_with,gain,gain_lo,gain_hi,nsg,nsg_lo,nsg_hi\n";
        for (const auto& row : report["per_reference_model"]) {
            const json& without = row["acc_without"];
            const json& with = row["acc_with"];
            out << row["model"].get<std::string>() << ','
                << row.value("family", std::string{}) << ','
                << (without.value("defined", false) ? d::csv_num(without["value"].get<double>())
                                                    : "")
                << ','
                << (with.value("defined", false) ? d::csv_num(with["value"].get<double>()) : "")
                << ',' << stat_cols(row["gain"]) << ',' << stat_cols(row["nsg"]) << '\n';
        }
    }
    {
        auto out = open("per_dataset.csv");
        out << "dataset,acc_without,acc_with,gain,gain_lo,gain_hi,nsg,nsg_lo,nsg_hi\n";
        for (const auto& row : report["per_dataset"]) {
            const json& without = row["acc_without"];
            const json& with = row["acc_with"];
            out << row["dataset"].get<std::string>() << ','
                << (without.value("defined", false) ? d::csv_num(without["value"].get<double>())
                                                    : "")
                << ','
                << (with.value("defined", false) ? d::csv_num(with["value"].get<double>()) : "")
                << ',' << stat_cols(row["gain"]) << ',' << stat_cols(row["nsg"]) << '\n';
        }
    }
    {
        auto out = open("egregious.csv");
        out << "model,rate,ci_lo,ci_hi,pairs,skipped_pairs\n";
        for (const auto& row : report["per_reference_model"]) {
            const json& e = row["egregious"];
            if (!e.contains("rate") || e["rate"].is_null()) continue;
            out << row["model"].get<std::string>() << ','
                << d::csv_num(e["rate"].get<double>()) << ','
                << d::csv_num(e["ci_lo"].get<double>()) << ','
                << d::csv_num(e["ci_hi"].get<double>()) << ',' << e["pairs"].get<std::size_t>()
                << ',' << e["skipped_pairs"].get<std::size_t>() << '\n';
        }
    }
    {
        auto out = open("rr_forest.csv");
        out << "dataset,feature,status,rr,ci_lo,ci_hi,n_changed\n";
        for (const auto& row : report["relative_risk"]) {
            out << row["dataset"].get<std::string>() << ',' << row["feature"].get<std::string>()
                << ',' << row["status"].get<std::string>() << ','
                << (row.contains("rr") && !row["rr"].is_null()
                        ? d::csv_num(row["rr"].get<double>())
                        : "")
                << ','
                << (row.contains("ci_lo") && !row["ci_lo"].is_null()
                        ? d::csv_num(row["ci_lo"].get<double>())
                        : "")
                << ','
                << (row.contains("ci_hi") && !row["ci_hi"].is_null()
                        ? d::csv_num(row["ci_hi"].get<double>())
                        : "")
                << ','
                << (row.contains("n_changed") ? std::to_string(row["n_changed"].get<std::size_t>())
                                              : "")
                << '\n';
        }
    }
    if (report.contains("cross_model")) {
        auto out = open("cross_model.csv");
        out << "family,acc_same,acc_cross,acc_baseline,nsg_same,nsg_cross,uplift,uplift_lo,"
               "uplift_hi\n";
        for (const auto& row : report["cross_model"]["per_family"]) {
            out << row["family"].get<std::string>() << ','
                << d::csv_num(row["acc_same"].get<double>()) << ','
                << d::csv_num(row["acc_cross"].get<double>()) << ','
                << d::csv_num(row["acc_baseline"].get<double>()) << ','
                << d::csv_num(row["nsg_same"].get<double>()) << ','
                << d::csv_num(row["nsg_cross"].get<double>()) << ','
                << d::csv_num(row["uplift"].get<double>()) << ','
                << d::csv_num(row["uplift_ci_lo"].get<double>()) << ','
                << d::csv_num(row["uplift_ci_hi"].get<double>()) << '\n';
        }
    }
}

}  // namespace nsg
