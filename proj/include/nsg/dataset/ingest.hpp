#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsg/dataset/schema.hpp"
#include "nsg/errors.hpp"
#include "nsg/vocabulary.hpp"

namespace nsg {

enum class TableFormat { csv, tsv };

struct RawTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // same arity as columns

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw IngestError("column '" + name + "' not found in table");
    }
};

namespace detail {

// Minimal RFC-4180 style field splitting: quoted fields may contain the
// delimiter and doubled quotes.
inline std::vector<std::string> split_delimited(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace detail

inline RawTable load_raw_table(const std::filesystem::path& source, TableFormat format) {
    std::ifstream in(source);
    if (!in) throw IngestError("cannot open " + source.string());
    const char delim = format == TableFormat::csv ? ',' : '\t';

    RawTable table;
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw IngestError("missing header row in " + source.string());
    }
    table.columns = detail::split_delimited(line, delim);

    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        ++row_index;
        if (trim(line).empty()) continue;
        auto cells = detail::split_delimited(line, delim);
        if (cells.size() != table.columns.size()) {
            throw IngestError("row " + std::to_string(row_index) + " in " + source.string() +
                              " has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.columns.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

// Discretizes a raw table against a schema. Categorical cells must already
// match an allowed value; numeric cells are mapped through the half-open
// bins. A cell that already equals one of the bin labels passes through
// unchanged, which makes binning idempotent.
inline std::vector<Record> bin_features(const RawTable& table, const FeatureSchema& schema) {
    schema.validate();
    std::vector<std::size_t> feature_cols;
    feature_cols.reserve(schema.features.size());
    for (const auto& f : schema.features) feature_cols.push_back(table.column_index(f.name));
    const std::size_t label_col = table.column_index(schema.label_name);

    std::vector<Record> records;
    records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        Record rec;
        rec.dataset_id = schema.dataset_id;
        for (std::size_t i = 0; i < schema.features.size(); ++i) {
            const auto& spec = schema.features[i];
            const std::string cell = trim(row[feature_cols[i]]);
            const auto& allowed = spec.allowed_values;
            if (std::find(allowed.begin(), allowed.end(), cell) != allowed.end()) {
                rec.values[spec.name] = cell;
                continue;
            }
            if (spec.kind == FeatureKind::binned_numeric) {
                double value = 0;
                if (!detail::parse_double(cell, value)) {
                    throw IngestError("row " + std::to_string(r + 1) + ", column '" + spec.name +
                                      "': cannot parse numeric value '" + cell + "'");
                }
                rec.values[spec.name] = spec.bin_for(value);
            } else {
                throw IngestError("row " + std::to_string(r + 1) + ", column '" + spec.name +
                                  "': value '" + cell + "' not in allowed values");
            }
        }
        const std::string label = trim(row[label_col]);
        if (label != schema.label_values[0] && label != schema.label_values[1]) {
            throw IngestError("row " + std::to_string(r + 1) + ": unknown label '" + label + "'");
        }
        rec.label = label;
        rec.record_id = record_content_id(schema.dataset_id, rec.values);
        records.push_back(std::move(rec));
    }
    return records;
}

struct LabelConflict {
    std::string record_id;
    std::map<std::string, std::size_t> label_counts;
    std::string kept;
};

struct DeduplicateResult {
    std::vector<Record> records;
    std::vector<LabelConflict> conflicts;
};

// Keeps one record per unique feature combination, in first-occurrence
// order. Value-identical rows with conflicting labels resolve to the
// majority label; ties keep the first occurrence's label. Conflicts are
// reported, not fatal.
inline DeduplicateResult deduplicate(const std::vector<Record>& records) {
    DeduplicateResult result;
    std::unordered_map<std::string, std::size_t> first_index;  // record_id -> result slot
    std::vector<std::map<std::string, std::size_t>> label_counts;
    std::vector<std::string> first_label;

    for (const auto& rec : records) {
        auto it = first_index.find(rec.record_id);
        if (it == first_index.end()) {
            first_index.emplace(rec.record_id, result.records.size());
            result.records.push_back(rec);
            label_counts.push_back({{rec.label, 1}});
            first_label.push_back(rec.label);
        } else {
            ++label_counts[it->second][rec.label];
        }
    }

    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const auto& counts = label_counts[i];
        if (counts.size() <= 1) continue;
        std::size_t best = 0;
        std::string majority = first_label[i];
        for (const auto& [label, n] : counts) {
            if (n > best) {
                best = n;
                majority = label;
            } else if (n == best && label == first_label[i]) {
                majority = label;  // tie goes to the first occurrence
            }
        }
        result.records[i].label = majority;
        result.conflicts.push_back({result.records[i].record_id, counts, majority});
    }
    return result;
}

}  // namespace nsg
