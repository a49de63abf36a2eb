#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "nsg/gateway/transcript.hpp"
#include "nsg/jsonl.hpp"

namespace nsg {

// Content-addressed, append-only transcript store: one JSONL file per
// model_id, one line per call. Appends flush immediately, so a crash loses
// at most the torn final line (which readers skip). Deleting a model's file
// invalidates only that model's calls.
class TranscriptCache {
public:
    explicit TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::optional<TranscriptRecord> lookup(const std::string& model_id,
                                           const std::string& transcript_id) {
        ModelStore& store = store_for(model_id);
        std::shared_lock lock(store.mutex);
        auto it = store.records.find(transcript_id);
        if (it == store.records.end()) return std::nullopt;
        TranscriptRecord copy = it->second;
        copy.from_cache = true;
        return copy;
    }

    void insert(const TranscriptRecord& record) {
        ModelStore& store = store_for(record.model_id);
        std::unique_lock lock(store.mutex);
        if (store.records.count(record.transcript_id)) return;
        store.records.emplace(record.transcript_id, record);
        if (!store.out.is_open()) {
            store.out.open(file_for(record.model_id), std::ios::app);
        }
        store.out << transcript_to_json(record).dump() << '\n';
        store.out.flush();
    }

    std::size_t size(const std::string& model_id) {
        ModelStore& store = store_for(model_id);
        std::shared_lock lock(store.mutex);
        return store.records.size();
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    struct ModelStore {
        std::shared_mutex mutex;
        std::unordered_map<std::string, TranscriptRecord> records;
        std::ofstream out;
    };

    std::filesystem::path file_for(const std::string& model_id) const {
        std::string safe = model_id;
        for (char& c : safe) {
            if (c == '/' || c == '\\' || c == ':') c = '_';
        }
        return dir_ / (safe + ".jsonl");
    }

    ModelStore& store_for(const std::string& model_id) {
        std::scoped_lock lock(registry_mutex_);
        auto it = stores_.find(model_id);
        if (it != stores_.end()) return *it->second;
        auto store = std::make_unique<ModelStore>();
        const auto file = file_for(model_id);
        if (std::filesystem::exists(file)) {
            for_each_jsonl(file, [&](json&& j) {
                TranscriptRecord t = transcript_from_json(j);
                store->records.emplace(t.transcript_id, std::move(t));
            });
        }
        auto [pos, _] = stores_.emplace(model_id, std::move(store));
        return *pos->second;
    }

    std::filesystem::path dir_;
    std::mutex registry_mutex_;
    std::unordered_map<std::string, std::unique_ptr<ModelStore>> stores_;
};

}  // namespace nsg
