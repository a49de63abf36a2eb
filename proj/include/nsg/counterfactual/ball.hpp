#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nsg/counterfactual/hamming.hpp"
#include "nsg/digest.hpp"
#include "nsg/rng.hpp"

namespace nsg {

struct GenerationParams {
    int max_distance = 2;         // r
    int min_ball_size = 10;       // m, ball size including the center
    double balance_tolerance = 0.3;  // epsilon
    int pairs_per_dataset = 1000;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_distance < 1 || min_ball_size < 1 || pairs_per_dataset < 1) {
            throw ConfigError("generation params must be positive");
        }
        if (balance_tolerance < 0.0 || balance_tolerance > 0.5) {
            throw ConfigError("balance tolerance must lie in [0, 0.5]");
        }
    }
};

// Target-balanced Hamming ball around one center. `member_ids` excludes the
// center; the size bound and balance factor are computed with the center
// included. balance_factor = |fraction sharing the center's label - 0.5|.
struct HammingBall {
    std::string center_id;
    std::vector<std::string> member_ids;
    double balance_factor = 0.0;
};

enum class SkipReason { insufficient_neighbors, imbalanced };

inline const char* to_string(SkipReason r) {
    return r == SkipReason::insufficient_neighbors ? "insufficient_neighbors" : "imbalanced";
}

using BallOutcome = std::variant<HammingBall, SkipReason>;

// Greedy alternating construction: starting from the center, alternately add
// a uniformly random remaining neighbor with the same label as the center,
// then one with a different label, until the ball holds m points. When the
// required side is exhausted the step falls through to the other side and
// the epsilon check does the rejection at the end. Randomness comes from a
// stream keyed by (seed, center_id), so balls are independent of the order
// centers are processed in.
inline BallOutcome build_balanced_ball(const std::string& center_id,
                                       const NeighborGraph& graph,
                                       const std::vector<Record>& records,
                                       const GenerationParams& params) {
    params.validate();
    const auto& neighbors = graph.neighbors(center_id);
    const std::size_t m = static_cast<std::size_t>(params.min_ball_size);
    if (neighbors.size() + 1 < m) return SkipReason::insufficient_neighbors;

    const std::uint32_t center_index = graph.index_of.at(center_id);
    const std::string& center_label = records[center_index].label;

    std::vector<std::uint32_t> same, diff;
    for (const auto& edge : neighbors) {
        (records[edge.index].label == center_label ? same : diff).push_back(edge.index);
    }

    Rng rng = derive_stream(params.seed, center_id);
    HammingBall ball;
    ball.center_id = center_id;
    std::size_t same_count = 1;  // the center itself
    bool want_same = true;

    while (ball.member_ids.size() + 1 < m) {
        std::vector<std::uint32_t>* pool = want_same ? &same : &diff;
        if (pool->empty()) pool = want_same ? &diff : &same;
        if (pool->empty()) return SkipReason::insufficient_neighbors;
        const std::size_t pick = static_cast<std::size_t>(rng.below(pool->size()));
        const std::uint32_t chosen = (*pool)[pick];
        (*pool)[pick] = pool->back();
        pool->pop_back();
        ball.member_ids.push_back(graph.ids[chosen]);
        if (records[chosen].label == center_label) ++same_count;
        want_same = !want_same;
    }

    const double frac_same = static_cast<double>(same_count) / static_cast<double>(m);
    ball.balance_factor = std::abs(frac_same - 0.5);
    if (ball.balance_factor > params.balance_tolerance + 1e-12) {
        return SkipReason::imbalanced;
    }
    return ball;
}

struct CounterfactualPair {
    std::string pair_id;
    std::string dataset_id;
    std::string factual_id;
    std::string counterfactual_id;
    std::vector<std::string> changed;  // exact set of differing features
    int distance = 0;
    std::string dimension;  // moral machines only; empty for tabular pairs
};

struct SampleResult {
    std::vector<CounterfactualPair> pairs;
    bool truncated = false;  // fewer candidates than requested
};

// Flattens every ball into (center, member) pairs and draws
// pairs_per_dataset of them uniformly without replacement. Points may sit
// in many balls, so the same record can appear on either side repeatedly;
// only the drawn (factual, counterfactual) combinations are distinct.
inline SampleResult sample_pairs(const std::vector<HammingBall>& balls,
                                 const std::vector<Record>& records,
                                 const NeighborGraph& graph,
                                 const GenerationParams& params) {
    params.validate();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> candidates;
    for (const auto& ball : balls) {
        const std::uint32_t center = graph.index_of.at(ball.center_id);
        for (const auto& member_id : ball.member_ids) {
            candidates.emplace_back(center, graph.index_of.at(member_id));
        }
    }

    SampleResult result;
    const std::size_t want = static_cast<std::size_t>(params.pairs_per_dataset);
    Rng rng = derive_stream(params.seed, "sample_pairs");
    std::vector<std::size_t> chosen = rng.sample_indices(candidates.size(), want);
    result.truncated = candidates.size() < want;

    result.pairs.reserve(chosen.size());
    for (std::size_t idx : chosen) {
        const auto [fi, ci] = candidates[idx];
        const Record& factual = records[fi];
        const Record& counterfactual = records[ci];
        CounterfactualPair pair;
        pair.dataset_id = factual.dataset_id;
        pair.factual_id = factual.record_id;
        pair.counterfactual_id = counterfactual.record_id;
        pair.changed = changed_features(factual, counterfactual);
        pair.distance = static_cast<int>(pair.changed.size());
        pair.pair_id = short_digest(pair.dataset_id + '\x1e' + pair.factual_id + '\x1e' +
                                    pair.counterfactual_id);
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

}  // namespace nsg
