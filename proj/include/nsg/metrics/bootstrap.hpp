#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "nsg/errors.hpp"
#include "nsg/rng.hpp"

namespace nsg {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;  // single cluster or zero variance
};

struct BootstrapParams {
    int iterations = 10000;
    double level = 0.95;
    std::uint64_t seed = 0;
};

namespace detail {

// Percentile with linear interpolation between order statistics.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted.front();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Clustered percentile bootstrap: clusters are resampled whole, with
// replacement, so everything sharing a cluster (all predictor rows of one
// counterfactual pair, under the default clustering) moves together. The
// statistic receives the multiset of chosen cluster indices. Iterations for
// which the statistic is undefined (NaN) are dropped. Per-iteration seeded
// substreams keep the result independent of evaluation order.
inline ConfidenceInterval clustered_bootstrap_ci(
    std::size_t n_clusters, const std::function<double(const std::vector<std::uint32_t>&)>& stat,
    const BootstrapParams& params = {}) {
    if (n_clusters == 0) throw MetricsError("bootstrap needs at least one cluster");

    std::vector<std::uint32_t> all(n_clusters);
    for (std::size_t i = 0; i < n_clusters; ++i) all[i] = static_cast<std::uint32_t>(i);
    const double point = stat(all);

    if (n_clusters == 1) return {point, point, true};

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(params.iterations));
    std::vector<std::uint32_t> chosen(n_clusters);
    for (int it = 0; it < params.iterations; ++it) {
        Rng rng = derive_stream(params.seed, "bootstrap", static_cast<std::uint64_t>(it));
        for (auto& c : chosen) {
            c = static_cast<std::uint32_t>(rng.below(n_clusters));
        }
        const double value = stat(chosen);
        if (!std::isnan(value)) stats.push_back(value);
    }
    if (stats.empty()) return {point, point, true};

    std::sort(stats.begin(), stats.end());
    const double alpha = (1.0 - params.level) / 2.0;
    ConfidenceInterval ci;
    ci.lo = detail::percentile_sorted(stats, alpha);
    ci.hi = detail::percentile_sorted(stats, 1.0 - alpha);
    ci.degenerate = stats.front() == stats.back();
    return ci;
}

// Convenience form: 95% CI for the mean of clustered scalar values.
inline ConfidenceInterval bootstrap_mean_ci(const std::vector<double>& values,
                                            const std::vector<std::uint32_t>& cluster_of,
                                            const BootstrapParams& params = {}) {
    if (values.size() != cluster_of.size() || values.empty()) {
        throw MetricsError("bootstrap_mean_ci needs matching, non-empty inputs");
    }
    std::uint32_t n_clusters = 0;
    for (auto c : cluster_of) n_clusters = std::max(n_clusters, c + 1);
    std::vector<double> cluster_sum(n_clusters, 0.0);
    std::vector<double> cluster_count(n_clusters, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        cluster_sum[cluster_of[i]] += values[i];
        cluster_count[cluster_of[i]] += 1.0;
    }
    auto stat = [&](const std::vector<std::uint32_t>& chosen) {
        double total = 0.0, count = 0.0;
        for (auto c : chosen) {
            total += cluster_sum[c];
            count += cluster_count[c];
        }
        return count > 0 ? total / count : std::nan("");
    };
    return clustered_bootstrap_ci(n_clusters, stat, params);
}

}  // namespace nsg
