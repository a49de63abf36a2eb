#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nsg/dataset/dataset_config.hpp"
#include "nsg/rng.hpp"

namespace nsg {

// Synthetic raw table for any tabular dataset config: rows are perturbations
// of a few seed rows (1-2 features changed), so the discretized table has
// dense Hamming neighborhoods; numeric cells are drawn inside the configured
// bins and labels are seeded coin flips. Used for offline smoke runs and the
// verification fixtures.
inline void write_synthetic_table(const DatasetConfig& cfg, const std::filesystem::path& path,
                                  int n_rows, std::uint64_t seed) {
    if (cfg.procedural) {
        throw ConfigError("dataset '" + cfg.dataset_id + "' is procedural; it has no raw table");
    }
    Rng rng = derive_stream(seed, "raw_csv:" + cfg.dataset_id);
    const auto& features = cfg.schema.features;

    auto cell_for = [&](const FeatureSpec& f, std::size_t bin) -> std::string {
        if (f.kind == FeatureKind::categorical) return f.allowed_values[bin];
        double value;
        if (bin == 0) {
            value = f.bin_edges.front() - 1.0;
        } else if (bin == f.bin_edges.size()) {
            value = f.bin_edges.back() + 1.0;
        } else {
            value = (f.bin_edges[bin - 1] + f.bin_edges[bin]) / 2.0;
        }
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.3f", value);
        return buf;
    };

    const int n_seeds = std::max(2, n_rows / 30);
    std::vector<std::vector<std::size_t>> bases;
    for (int s = 0; s < n_seeds; ++s) {
        std::vector<std::size_t> base;
        for (const auto& f : features) {
            base.push_back(static_cast<std::size_t>(rng.below(f.allowed_values.size())));
        }
        bases.push_back(std::move(base));
    }

    std::filesystem::create_directories(std::filesystem::absolute(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IngestError("cannot write " + path.string());
    for (const auto& feature : features) out << feature.name << ',';
    out << cfg.schema.label_name << '\n';
    for (int row = 0; row < n_rows; ++row) {
        auto bins = bases[rng.below(bases.size())];
        const int flips = 1 + static_cast<int>(row % 2);
        for (int k = 0; k < flips; ++k) {
            const std::size_t f = static_cast<std::size_t>(rng.below(features.size()));
            bins[f] = static_cast<std::size_t>(rng.below(features[f].allowed_values.size()));
        }
        for (std::size_t f = 0; f < features.size(); ++f) {
            out << cell_for(features[f], bins[f]) << ',';
        }
        out << (rng.bernoulli(0.5) ? cfg.vocabulary.positive.canonical
                                   : cfg.vocabulary.negative.canonical)
            << '\n';
    }
}

}  // namespace nsg
