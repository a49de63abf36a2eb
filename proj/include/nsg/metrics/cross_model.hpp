#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nsg/metrics/accuracy.hpp"
#include "nsg/metrics/bootstrap.hpp"
#include "nsg/metrics/prediction_table.hpp"

namespace nsg {

// Self- versus cross-model explanation comparison. For a reference model M:
//   Acc_same(M)  averages predictor correctness under M's own explanations,
//                over predictors outside M's family.
//   Acc_cross(M) substitutes explanations from other-family models that gave
//                the same answer on the original question; per question it
//                averages over those explainers (each over predictors outside
//                the explainer's family), then over questions. Questions with
//                no valid cross explainer are excluded.
//   Both NSGs use the same no-explanation baseline, aggregated first:
//                NSG = (Acc - Acc_base) / (1 - Acc_base).
//   Uplift = NSG_same - NSG_cross.

struct CrossModelModelResult {
    std::string model;
    std::string family;
    double acc_same = 0.0;
    double acc_cross = 0.0;
    double acc_baseline = 0.0;
    double nsg_same = 0.0;
    double nsg_cross = 0.0;
    double uplift = 0.0;
    std::size_t questions_used = 0;
    std::size_t questions_excluded = 0;
};

struct CrossModelFamilyResult {
    std::string family;
    double acc_same = 0.0;
    double acc_cross = 0.0;
    double acc_baseline = 0.0;
    double nsg_same = 0.0;
    double nsg_cross = 0.0;
    double uplift = 0.0;
    ConfidenceInterval uplift_ci;
};

struct CrossModelReport {
    std::vector<CrossModelModelResult> per_model;
    std::vector<CrossModelFamilyResult> per_family;
};

namespace detail {

struct Tally {
    double correct = 0.0;
    double total = 0.0;

    void add(bool c) {
        correct += c;
        total += 1.0;
    }
    double mean() const { return total > 0 ? correct / total : std::nan(""); }
};

// Per (reference model, pair) slice of the table, pre-aggregated for both
// the point estimates and the bootstrap statistic.
struct CrossPairSlice {
    Tally same;
    Tally baseline;
    std::map<std::string, Tally> by_cross_explainer;
};

struct CrossModelIndex {
    std::string family;
    std::map<std::string, CrossPairSlice> by_pair;
};

inline std::map<std::string, CrossModelIndex> build_cross_index(const PredictionTable& table) {
    std::map<std::string, std::string> family_of_predictor;
    for (const auto& row : table) family_of_predictor[row.predictor_model] = row.predictor_family;

    std::map<std::string, CrossModelIndex> index;
    for (const auto& row : table) {
        auto& model_index = index[row.reference_model];
        model_index.family = row.reference_family;
        auto& slice = model_index.by_pair[row.pair_id];
        if (row.condition == PredictorCondition::baseline && row.is_self_explanation()) {
            if (row.predictor_family != row.reference_family) slice.baseline.add(row.correct);
        } else if (row.condition == PredictorCondition::with_explanation) {
            if (row.is_self_explanation()) {
                if (row.predictor_family != row.reference_family) slice.same.add(row.correct);
            } else if (row.explainer_family != row.reference_family && row.answer_matched) {
                if (row.predictor_family != row.explainer_family) {
                    slice.by_cross_explainer[row.explainer_model].add(row.correct);
                }
            }
        }
    }
    return index;
}

struct ModelAccs {
    double same = std::nan("");
    double cross = std::nan("");
    double baseline = std::nan("");
    std::size_t questions_used = 0;
    std::size_t questions_excluded = 0;
};

// Evaluates the three accuracies over a multiset of the model's pairs.
inline ModelAccs eval_model_accs(const std::vector<const CrossPairSlice*>& slices) {
    Tally same, baseline;
    double cross_sum = 0.0;
    std::size_t cross_n = 0, excluded = 0;
    for (const CrossPairSlice* slice : slices) {
        same.correct += slice->same.correct;
        same.total += slice->same.total;
        baseline.correct += slice->baseline.correct;
        baseline.total += slice->baseline.total;
        if (slice->by_cross_explainer.empty()) {
            ++excluded;
        } else {
            double per_explainer_sum = 0.0;
            for (const auto& [_, tally] : slice->by_cross_explainer) {
                per_explainer_sum += tally.mean();
            }
            cross_sum += per_explainer_sum / static_cast<double>(slice->by_cross_explainer.size());
            ++cross_n;
        }
    }
    ModelAccs accs;
    accs.same = same.mean();
    accs.baseline = baseline.mean();
    accs.cross = cross_n > 0 ? cross_sum / static_cast<double>(cross_n) : std::nan("");
    accs.questions_used = cross_n;
    accs.questions_excluded = excluded;
    return accs;
}

inline double safe_nsg(double acc, double base) {
    if (std::isnan(acc) || std::isnan(base) || base >= 1.0) return std::nan("");
    return (acc - base) / (1.0 - base);
}

}  // namespace detail

inline CrossModelReport cross_model_metrics(const PredictionTable& table,
                                            const BootstrapParams& params = {}) {
    const auto index = detail::build_cross_index(table);
    if (index.empty()) throw MetricsError("cross-model metrics need a non-empty table");

    CrossModelReport report;
    bool any_cross = false;
    std::map<std::string, std::vector<const CrossModelModelResult*>> by_family;
    for (const auto& [model, model_index] : index) {
        std::vector<const detail::CrossPairSlice*> slices;
        slices.reserve(model_index.by_pair.size());
        for (const auto& [_, slice] : model_index.by_pair) slices.push_back(&slice);
        const auto accs = detail::eval_model_accs(slices);

        CrossModelModelResult r;
        r.model = model;
        r.family = model_index.family;
        r.acc_same = accs.same;
        r.acc_cross = accs.cross;
        r.acc_baseline = accs.baseline;
        r.nsg_same = detail::safe_nsg(accs.same, accs.baseline);
        r.nsg_cross = detail::safe_nsg(accs.cross, accs.baseline);
        r.uplift = r.nsg_same - r.nsg_cross;
        r.questions_used = accs.questions_used;
        r.questions_excluded = accs.questions_excluded;
        if (accs.questions_used > 0) any_cross = true;
        report.per_model.push_back(r);
    }
    if (!any_cross) {
        throw MetricsError("no valid cross-family explainer found anywhere in the table");
    }
    for (const auto& r : report.per_model) by_family[r.family].push_back(&r);

    // Family aggregation: mean the accuracies over the family's models first,
    // then normalize. The uplift CI resamples pairs, carrying every model's
    // rows for a pair together.
    for (const auto& [family, models] : by_family) {
        CrossModelFamilyResult f;
        f.family = family;
        double same = 0, cross = 0, base = 0;
        std::size_t n = 0;
        for (const auto* m : models) {
            if (std::isnan(m->acc_same) || std::isnan(m->acc_cross) ||
                std::isnan(m->acc_baseline)) {
                continue;
            }
            same += m->acc_same;
            cross += m->acc_cross;
            base += m->acc_baseline;
            ++n;
        }
        if (n == 0) continue;
        f.acc_same = same / static_cast<double>(n);
        f.acc_cross = cross / static_cast<double>(n);
        f.acc_baseline = base / static_cast<double>(n);
        f.nsg_same = detail::safe_nsg(f.acc_same, f.acc_baseline);
        f.nsg_cross = detail::safe_nsg(f.acc_cross, f.acc_baseline);
        f.uplift = f.nsg_same - f.nsg_cross;

        std::set<std::string> pair_ids;
        std::vector<const detail::CrossModelIndex*> family_models;
        for (const auto& [model, model_index] : index) {
            if (model_index.family != family) continue;
            family_models.push_back(&model_index);
            for (const auto& [pair_id, _] : model_index.by_pair) pair_ids.insert(pair_id);
        }
        std::vector<std::string> pairs(pair_ids.begin(), pair_ids.end());

        auto stat = [&](const std::vector<std::uint32_t>& chosen) -> double {
            double fam_same = 0, fam_cross = 0, fam_base = 0;
            std::size_t models_in = 0;
            for (const detail::CrossModelIndex* model_index : family_models) {
                std::vector<const detail::CrossPairSlice*> slices;
                slices.reserve(chosen.size());
                for (auto c : chosen) {
                    auto it = model_index->by_pair.find(pairs[c]);
                    if (it != model_index->by_pair.end()) slices.push_back(&it->second);
                }
                const auto accs = detail::eval_model_accs(slices);
                if (std::isnan(accs.same) || std::isnan(accs.cross) ||
                    std::isnan(accs.baseline)) {
                    return std::nan("");
                }
                fam_same += accs.same;
                fam_cross += accs.cross;
                fam_base += accs.baseline;
                ++models_in;
            }
            if (models_in == 0) return std::nan("");
            const double b = fam_base / static_cast<double>(models_in);
            const double ns = detail::safe_nsg(fam_same / static_cast<double>(models_in), b);
            const double nc = detail::safe_nsg(fam_cross / static_cast<double>(models_in), b);
            return ns - nc;
        };
        f.uplift_ci = clustered_bootstrap_ci(pairs.size(), stat, params);
        report.per_family.push_back(std::move(f));
    }
    return report;
}

}  // namespace nsg
