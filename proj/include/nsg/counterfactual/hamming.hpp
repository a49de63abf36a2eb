#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsg/dataset/schema.hpp"
#include "nsg/errors.hpp"

namespace nsg {

// Number of features whose values differ between two records of one schema.
inline int hamming_distance(const Record& a, const Record& b) {
    if (a.dataset_id != b.dataset_id || a.values.size() != b.values.size()) {
        throw MetricsError("hamming_distance: records from different schemas");
    }
    int distance = 0;
    auto ita = a.values.begin();
    auto itb = b.values.begin();
    for (; ita != a.values.end(); ++ita, ++itb) {
        if (ita->first != itb->first) {
            throw MetricsError("hamming_distance: records from different schemas");
        }
        if (ita->second != itb->second) ++distance;
    }
    return distance;
}

inline std::vector<std::string> changed_features(const Record& a, const Record& b) {
    std::vector<std::string> out;
    auto ita = a.values.begin();
    auto itb = b.values.begin();
    for (; ita != a.values.end(); ++ita, ++itb) {
        if (ita->second != itb->second) out.push_back(ita->first);
    }
    return out;
}

struct NeighborEdge {
    std::uint32_t index;  // position in the record list the graph was built from
    std::uint8_t distance;
};

// All record pairs within Hamming distance [1, r]. Symmetric, no self edges.
// Adjacency lists are sorted by neighbor index so the structure is a pure
// function of the input ordering.
struct NeighborGraph {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::uint32_t> index_of;
    std::vector<std::vector<NeighborEdge>> adjacency;
    int max_distance = 0;

    const std::vector<NeighborEdge>& neighbors(const std::string& record_id) const {
        auto it = index_of.find(record_id);
        if (it == index_of.end()) {
            throw MetricsError("record '" + record_id + "' not in neighbor graph");
        }
        return adjacency[it->second];
    }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& adj : adjacency) n += adj.size();
        return n / 2;
    }
};

namespace detail {

// Integer-coded view of a record list for fast pairwise distance scans.
struct EncodedRecords {
    std::size_t n_features = 0;
    std::vector<std::uint16_t> codes;  // row-major, n_records x n_features

    const std::uint16_t* row(std::size_t i) const { return codes.data() + i * n_features; }
};

inline EncodedRecords encode_records(const std::vector<Record>& records) {
    EncodedRecords enc;
    if (records.empty()) return enc;
    enc.n_features = records.front().values.size();
    std::vector<std::unordered_map<std::string, std::uint16_t>> dict(enc.n_features);
    enc.codes.reserve(records.size() * enc.n_features);
    for (const auto& rec : records) {
        if (rec.values.size() != enc.n_features) {
            throw MetricsError("neighbor graph input records disagree on feature count");
        }
        std::size_t f = 0;
        for (const auto& [name, value] : rec.values) {
            auto& d = dict[f];
            auto [it, _] = d.emplace(value, static_cast<std::uint16_t>(d.size()));
            enc.codes.push_back(it->second);
            ++f;
        }
    }
    return enc;
}

}  // namespace detail

// Exact pairwise construction with early abort once a pair exceeds r. The
// contract is only the edge set; this direct scan stays under a second for
// the dataset sizes used here (thousands of deduplicated rows).
inline NeighborGraph build_neighbor_graph(const std::vector<Record>& records, int max_distance) {
    if (max_distance < 1) throw ConfigError("neighbor graph needs max_distance >= 1");
    NeighborGraph graph;
    graph.max_distance = max_distance;
    graph.ids.reserve(records.size());
    graph.adjacency.resize(records.size());
    for (std::uint32_t i = 0; i < records.size(); ++i) {
        graph.ids.push_back(records[i].record_id);
        if (!graph.index_of.emplace(records[i].record_id, i).second) {
            throw MetricsError("duplicate record_id in neighbor graph input (deduplicate first)");
        }
    }

    const auto enc = detail::encode_records(records);
    const std::size_t n = records.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t* ri = enc.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::uint16_t* rj = enc.row(j);
            int d = 0;
            for (std::size_t f = 0; f < enc.n_features; ++f) {
                d += ri[f] != rj[f];
                if (d > max_distance) break;
            }
            if (d >= 1 && d <= max_distance) {
                graph.adjacency[i].push_back({static_cast<std::uint32_t>(j),
                                              static_cast<std::uint8_t>(d)});
                graph.adjacency[j].push_back({static_cast<std::uint32_t>(i),
                                              static_cast<std::uint8_t>(d)});
            }
        }
    }
    for (auto& adj : graph.adjacency) {
        std::sort(adj.begin(), adj.end(),
                  [](const NeighborEdge& a, const NeighborEdge& b) { return a.index < b.index; });
    }
    return graph;
}

}  // namespace nsg
