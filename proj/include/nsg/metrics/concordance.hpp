#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "nsg/errors.hpp"

namespace nsg {

// Mean ranks (1-based) for a score vector; tied scores share the average of
// the positions they span.
inline std::vector<double> ranks_with_ties(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

// Kendall's coefficient of concordance over an m x n rank matrix (m raters
// ranking n items). W = 12 S / (m^2 (n^3 - n)), with the usual tie
// correction subtracting m * sum_i T_i from the denominator when any rater
// assigned mean ranks to ties.
inline double kendalls_w(const std::vector<std::vector<double>>& ranks) {
    const std::size_t m = ranks.size();
    if (m == 0) throw MetricsError("concordance needs at least one rater");
    const std::size_t n = ranks.front().size();
    if (n < 2) throw MetricsError("concordance needs at least two items");
    for (const auto& row : ranks) {
        if (row.size() != n) throw MetricsError("every rater must rank all items");
    }

    std::vector<double> rank_sums(n, 0.0);
    double tie_correction = 0.0;
    for (const auto& row : ranks) {
        for (std::size_t j = 0; j < n; ++j) rank_sums[j] += row[j];
        std::map<double, std::size_t> tie_groups;
        for (double r : row) ++tie_groups[r];
        for (const auto& [_, t] : tie_groups) {
            const double td = static_cast<double>(t);
            tie_correction += td * td * td - td;
        }
    }

    const double mean_sum =
        static_cast<double>(m) * (static_cast<double>(n) + 1.0) / 2.0;
    double s = 0.0;
    for (double sum : rank_sums) s += (sum - mean_sum) * (sum - mean_sum);

    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double denominator = md * md * (nd * nd * nd - nd) - md * tie_correction;
    if (denominator <= 0.0) {
        throw MetricsError("concordance undefined: every rater ranked all items as tied");
    }
    return 12.0 * s / denominator;
}

inline double kendalls_w_from_scores(const std::vector<std::vector<double>>& scores) {
    std::vector<std::vector<double>> ranks;
    ranks.reserve(scores.size());
    for (const auto& row : scores) ranks.push_back(ranks_with_ties(row));
    return kendalls_w(ranks);
}

}  // namespace nsg
