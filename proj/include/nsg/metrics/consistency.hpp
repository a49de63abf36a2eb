#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsg/errors.hpp"

namespace nsg {

struct ConsistencyCeiling {
    double ceiling = 0.0;          // fraction of pairs where the evaluation answer is modal
    std::size_t ties_broken = 0;   // modal ties resolved toward the evaluation answer
    std::size_t pairs = 0;
};

// Accuracy of an oracle predictor that knows the reference model's modal
// response per pair: an upper bound on attainable predictor accuracy under
// stochastic reference behavior. Ties in the rollout counts break toward the
// evaluation answer and are reported.
inline ConsistencyCeiling consistency_ceiling(
    const std::map<std::string, std::vector<std::string>>& rollouts,
    const std::map<std::string, std::string>& eval_answer) {
    if (rollouts.empty()) throw MetricsError("consistency ceiling needs rollouts");
    ConsistencyCeiling out;
    std::size_t hits = 0;
    for (const auto& [pair_id, labels] : rollouts) {
        if (labels.size() < 2) {
            throw MetricsError("pair " + pair_id + " has fewer than 2 rollouts");
        }
        auto eit = eval_answer.find(pair_id);
        if (eit == eval_answer.end()) {
            throw MetricsError("pair " + pair_id + " has rollouts but no evaluation answer");
        }
        std::map<std::string, std::size_t> counts;
        for (const auto& label : labels) ++counts[label];
        std::size_t best = 0;
        for (const auto& [_, c] : counts) best = std::max(best, c);
        std::size_t modal_labels = 0;
        bool eval_is_modal = false;
        for (const auto& [label, c] : counts) {
            if (c != best) continue;
            ++modal_labels;
            if (label == eit->second) eval_is_modal = true;
        }
        if (eval_is_modal) {
            ++hits;
            if (modal_labels > 1) ++out.ties_broken;
        }
        ++out.pairs;
    }
    out.ceiling = static_cast<double>(hits) / static_cast<double>(out.pairs);
    return out;
}

}  // namespace nsg
