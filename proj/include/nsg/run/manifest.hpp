#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "nsg/jsonl.hpp"

namespace nsg {

inline constexpr const char* kToolVersion = "0.1.0";

struct PhaseMarker {
    bool complete = false;
    std::string config_digest;
    json counts = json::object();
    std::string started;
    std::string finished;
};

// Phase-completion bookkeeping for one run directory. A phase marker is only
// trusted when its recorded digest matches the current config; editing the
// config therefore invalidates everything computed under the old one.
struct RunManifest {
    std::string run_id;
    std::string config_digest;
    std::string tool_version = kToolVersion;
    std::map<std::string, PhaseMarker> phases;

    bool phase_current(const std::string& phase, const std::string& digest) const {
        auto it = phases.find(phase);
        return it != phases.end() && it->second.complete && it->second.config_digest == digest;
    }
};

inline json manifest_to_json(const RunManifest& m) {
    json phases = json::object();
    for (const auto& [name, marker] : m.phases) {
        phases[name] = json{{"complete", marker.complete},
                            {"config_digest", marker.config_digest},
                            {"counts", marker.counts},
                            {"started", marker.started},
                            {"finished", marker.finished}};
    }
    return json{{"run_id", m.run_id},
                {"config_digest", m.config_digest},
                {"tool_version", m.tool_version},
                {"phases", phases}};
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.run_id = j.value("run_id", std::string{});
    m.config_digest = j.value("config_digest", std::string{});
    m.tool_version = j.value("tool_version", std::string{kToolVersion});
    if (j.contains("phases")) {
        for (const auto& [name, pj] : j.at("phases").items()) {
            PhaseMarker marker;
            marker.complete = pj.value("complete", false);
            marker.config_digest = pj.value("config_digest", std::string{});
            marker.counts = pj.value("counts", json::object());
            marker.started = pj.value("started", std::string{});
            marker.finished = pj.value("finished", std::string{});
            m.phases[name] = std::move(marker);
        }
    }
    return m;
}

inline RunManifest load_manifest(const std::filesystem::path& run_dir) {
    const auto file = run_dir / "manifest.json";
    if (!std::filesystem::exists(file)) return {};
    return manifest_from_json(read_json_file(file));
}

inline void save_manifest(const std::filesystem::path& run_dir, const RunManifest& m) {
    // Write-then-rename keeps the manifest intact if the process dies here.
    const auto file = run_dir / "manifest.json";
    const auto tmp = run_dir / "manifest.json.tmp";
    write_json_file(tmp, manifest_to_json(m));
    std::filesystem::rename(tmp, file);
}

}  // namespace nsg
