#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nsg/digest.hpp"
#include "nsg/errors.hpp"

namespace nsg {

enum class FeatureKind { categorical, binned_numeric };

// One column of a dataset after discretization. For binned_numeric features
// the bins are half-open [low, high): a value equal to an edge belongs to
// the upper bin, so with edges {40, 41, 61} the value 40 lands in the
// second bin ("Full-time (40)" in the income schema).
struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::categorical;
    std::vector<std::string> allowed_values;
    std::vector<double> bin_edges;   // binned_numeric only, strictly increasing
    std::vector<std::string> bin_labels;  // |bin_edges| + 1 entries

    void validate() const {
        if (name.empty()) throw ConfigError("feature with empty name");
        if (allowed_values.size() < 2) {
            throw ConfigError("feature '" + name + "' needs >= 2 allowed values");
        }
        if (kind == FeatureKind::binned_numeric) {
            for (std::size_t i = 1; i < bin_edges.size(); ++i) {
                if (!(bin_edges[i - 1] < bin_edges[i])) {
                    throw ConfigError("feature '" + name + "' bin edges not strictly increasing");
                }
            }
            if (bin_labels.size() != bin_edges.size() + 1) {
                throw ConfigError("feature '" + name + "' needs |edges|+1 bin labels");
            }
            if (bin_labels != allowed_values) {
                throw ConfigError("feature '" + name +
                                  "' allowed_values must equal bin_labels");
            }
        }
    }

    // Bin lookup for a numeric value under the half-open convention.
    const std::string& bin_for(double value) const {
        std::size_t idx = 0;
        while (idx < bin_edges.size() && value >= bin_edges[idx]) ++idx;
        return bin_labels[idx];
    }
};

struct FeatureSchema {
    std::string dataset_id;
    std::vector<FeatureSpec> features;
    std::string label_name;
    std::array<std::string, 2> label_values;
    std::string template_id;

    void validate() const {
        if (dataset_id.empty()) throw ConfigError("schema with empty dataset_id");
        std::set<std::string> names;
        for (const auto& f : features) {
            f.validate();
            if (!names.insert(f.name).second) {
                throw ConfigError("duplicate feature name '" + f.name + "'");
            }
        }
        if (label_values[0] == label_values[1] || label_values[0].empty()) {
            throw ConfigError("schema needs two distinct label values");
        }
    }

    const FeatureSpec* find(const std::string& name) const {
        for (const auto& f : features) {
            if (f.name == name) return &f;
        }
        return nullptr;
    }
};

// One discretized row. `values` maps every schema feature to one of its
// allowed values; the map keeps keys sorted, which makes the content hash
// below order independent.
struct Record {
    std::string record_id;
    std::string dataset_id;
    std::map<std::string, std::string> values;
    std::string label;

    bool operator==(const Record& other) const = default;
};

inline std::string record_content_id(const std::string& dataset_id,
                                     const std::map<std::string, std::string>& values) {
    std::string buf = dataset_id;
    for (const auto& [k, v] : values) {
        buf += '\x1e';
        buf += k;
        buf += '\x1f';
        buf += v;
    }
    return short_digest(buf);
}

inline void validate_record(const Record& r, const FeatureSchema& schema) {
    if (r.values.size() != schema.features.size()) {
        throw IngestError("record " + r.record_id + " has wrong feature count");
    }
    for (const auto& f : schema.features) {
        auto it = r.values.find(f.name);
        if (it == r.values.end()) {
            throw IngestError("record " + r.record_id + " missing feature '" + f.name + "'");
        }
        const auto& allowed = f.allowed_values;
        if (std::find(allowed.begin(), allowed.end(), it->second) == allowed.end()) {
            throw IngestError("record " + r.record_id + " value '" + it->second +
                              "' not allowed for feature '" + f.name + "'");
        }
    }
    if (r.label != schema.label_values[0] && r.label != schema.label_values[1]) {
        throw IngestError("record " + r.record_id + " has unknown label '" + r.label + "'");
    }
}

struct RenderedQuestion {
    std::string record_id;
    std::string text;
    std::string template_id;
};

}  // namespace nsg
