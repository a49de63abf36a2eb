#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "nsg/errors.hpp"

namespace nsg {

using json = nlohmann::json;

// Line-delimited JSON files carry every persisted table in this project.
// Readers tolerate a truncated final line so a crash mid-append never
// poisons a file; everything before the torn line is still usable.

inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(json&&)>& fn) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            // A torn trailing line is expected after a crash; anything else
            // mid-file is corruption worth surfacing.
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw IngestError("corrupt JSONL record in " + path.string());
        }
        fn(std::move(j));
    }
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> rows;
    for_each_jsonl(path, [&](json&& j) { rows.push_back(std::move(j)); });
    return rows;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IngestError("cannot write " + path.string());
    for (const auto& row : rows) out << row.dump() << '\n';
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + path.string());
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IngestError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace nsg
