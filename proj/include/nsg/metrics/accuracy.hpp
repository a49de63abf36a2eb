#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsg/errors.hpp"
#include "nsg/metrics/prediction_table.hpp"

namespace nsg {

// Plain fraction of correct rows under a filter.
inline double row_accuracy(const PredictionTable& table, const TableFilter& filter) {
    std::size_t n = 0, correct = 0;
    for (const auto& row : table) {
        if (!filter.matches(row)) continue;
        ++n;
        correct += row.correct;
    }
    if (n == 0) throw MetricsError("accuracy filter matched no rows");
    return static_cast<double>(correct) / static_cast<double>(n);
}

// Ensemble accuracy: the unweighted mean over predictor models of their
// per-predictor accuracies. Pairs missing a predictor's row simply do not
// enter that predictor's mean; nothing is imputed.
inline double predictor_accuracy(const PredictionTable& table, const TableFilter& filter) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_predictor;  // correct, total
    for (const auto& row : table) {
        if (!filter.matches(row)) continue;
        auto& [correct, total] = per_predictor[row.predictor_model];
        correct += row.correct;
        ++total;
    }
    if (per_predictor.empty()) throw MetricsError("accuracy filter matched no rows");
    double sum = 0.0;
    for (const auto& [_, counts] : per_predictor) {
        sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return sum / static_cast<double>(per_predictor.size());
}

inline double simulatability_gain(double acc_with, double acc_without) {
    if (acc_with < 0.0 || acc_with > 1.0 || acc_without < 0.0 || acc_without > 1.0) {
        throw MetricsError("accuracies must lie in [0, 1]");
    }
    return acc_with - acc_without;
}

// Normalized Simulatability Gain: the fraction of the achievable improvement
// that explanations deliver. 1 means the explanations enable perfect
// counterfactual prediction, 0 means no value, negative means they mislead.
inline double normalized_simulatability_gain(double acc_with, double acc_without) {
    if (acc_with < 0.0 || acc_with > 1.0 || acc_without < 0.0 || acc_without > 1.0) {
        throw MetricsError("accuracies must lie in [0, 1]");
    }
    if (acc_without >= 1.0) {
        throw MetricsError("NSG undefined: baseline accuracy is 1, no headroom remains");
    }
    return (acc_with - acc_without) / (1.0 - acc_without);
}

}  // namespace nsg
