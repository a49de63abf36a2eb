#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "nsg/digest.hpp"
#include "nsg/gateway/endpoint.hpp"
#include "nsg/jsonl.hpp"

namespace nsg {

// One model call: the cache and audit unit. `transcript_id` is a content
// address over (model, prompt, sampling params, cache salt), so identical
// calls resolve to the same record across runs.
struct TranscriptRecord {
    std::string transcript_id;
    std::string model_id;
    std::string prompt;
    std::string raw_output;
    std::string reasoning_trace;  // empty when the provider exposes none
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t reasoning_tokens = 0;
    std::int64_t latency_ms = 0;
    bool from_cache = false;
    std::int64_t timestamp = 0;  // unix seconds; 0 for simulated calls
    std::uint64_t cache_salt = 0;
};

struct SamplingKey {
    double temperature = -1.0;
    int max_output_tokens = 0;
    ReasoningStrength reasoning = ReasoningStrength::none;
};

inline std::string transcript_digest(const std::string& model_id, const std::string& prompt,
                                     const SamplingKey& sampling, std::uint64_t salt) {
    char params[96];
    std::snprintf(params, sizeof(params), "t=%.6g;m=%d;r=%s;s=%llu", sampling.temperature,
                  sampling.max_output_tokens, to_string(sampling.reasoning),
                  static_cast<unsigned long long>(salt));
    return sha256_hex(model_id + '\x1e' + params + '\x1e' + prompt);
}

inline json transcript_to_json(const TranscriptRecord& t) {
    return json{{"transcript_id", t.transcript_id},
                {"model_id", t.model_id},
                {"prompt", t.prompt},
                {"raw_output", t.raw_output},
                {"reasoning_trace", t.reasoning_trace},
                {"prompt_tokens", t.prompt_tokens},
                {"output_tokens", t.output_tokens},
                {"reasoning_tokens", t.reasoning_tokens},
                {"latency_ms", t.latency_ms},
                {"from_cache", t.from_cache},
                {"timestamp", t.timestamp},
                {"cache_salt", t.cache_salt}};
}

inline TranscriptRecord transcript_from_json(const json& j) {
    TranscriptRecord t;
    t.transcript_id = j.at("transcript_id").get<std::string>();
    t.model_id = j.at("model_id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.raw_output = j.at("raw_output").get<std::string>();
    t.reasoning_trace = j.value("reasoning_trace", std::string{});
    t.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    t.output_tokens = j.value("output_tokens", std::int64_t{0});
    t.reasoning_tokens = j.value("reasoning_tokens", std::int64_t{0});
    t.latency_ms = j.value("latency_ms", std::int64_t{0});
    t.from_cache = j.value("from_cache", false);
    t.timestamp = j.value("timestamp", std::int64_t{0});
    t.cache_salt = j.value("cache_salt", std::uint64_t{0});
    return t;
}

}  // namespace nsg
