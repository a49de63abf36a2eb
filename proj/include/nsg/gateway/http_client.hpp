#pragma once

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

#include "nsg/errors.hpp"
#include "nsg/gateway/endpoint.hpp"
#include "nsg/gateway/transcript.hpp"
#include "nsg/jsonl.hpp"

namespace nsg {

// Chat-completions exchange against one endpoint. Transient failures
// (connection errors, 429, 5xx) retry with exponential backoff up to
// max_retries; other statuses are terminal. The request/response shape is
// the common hosted-gateway one: messages array in, choices[0].message out.
class ChatCompletionClient {
public:
    explicit ChatCompletionClient(const ModelEndpointConfig& config) : config_(config) {
        config_.validate();
        if (!config_.credential_env.empty()) {
            const char* token = std::getenv(config_.credential_env.c_str());
            if (!token || !*token) {
                throw ConfigError("credential env var '" + config_.credential_env +
                                  "' is not set for model '" + config_.model_id + "'");
            }
            bearer_ = token;
        }
    }

    TranscriptRecord complete(const std::string& prompt, std::uint64_t salt) {
        const json body{
            {"model", config_.model_id},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        };
        json request = body;
        if (config_.temperature >= 0.0) request["temperature"] = config_.temperature;
        if (config_.max_output_tokens > 0) request["max_tokens"] = config_.max_output_tokens;
        if (config_.reasoning_strength != ReasoningStrength::none) {
            request["reasoning_effort"] = to_string(config_.reasoning_strength);
        }
        const std::string payload = request.dump();

        const auto started = std::chrono::steady_clock::now();
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                const auto delay = std::chrono::milliseconds(
                    static_cast<long long>(config_.retry_base_ms) << (attempt - 1));
                std::this_thread::sleep_for(delay);
            }
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(config_.timeout_seconds);
            client.set_read_timeout(config_.timeout_seconds);
            httplib::Headers headers;
            if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

            auto res = client.Post(config_.api_path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                throw EndpointError("model '" + config_.model_id + "' returned status " +
                                        std::to_string(res->status) + ": " +
                                        res->body.substr(0, 200),
                                    res->status);
            }
            return parse_response(res->body, prompt, salt, started);
        }
        throw TransportError("model '" + config_.model_id + "' exhausted " +
                             std::to_string(config_.max_retries) + " retries; last error: " +
                             last_error);
    }

private:
    TranscriptRecord parse_response(const std::string& body, const std::string& prompt,
                                    std::uint64_t salt,
                                    std::chrono::steady_clock::time_point started) const {
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
            throw EndpointError("model '" + config_.model_id + "' returned an unparseable body: " +
                                body.substr(0, 200));
        }
        TranscriptRecord t;
        t.model_id = config_.model_id;
        t.prompt = prompt;
        t.cache_salt = salt;
        const auto& message = j["choices"][0]["message"];
        t.raw_output = message.value("content", std::string{});
        t.reasoning_trace = message.value("reasoning", std::string{});
        if (j.contains("usage")) {
            const auto& usage = j["usage"];
            t.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
            t.output_tokens = usage.value("completion_tokens", std::int64_t{0});
            t.reasoning_tokens = usage.value("reasoning_tokens", std::int64_t{0});
        }
        t.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
        t.timestamp = static_cast<std::int64_t>(std::time(nullptr));
        t.transcript_id = transcript_digest(
            config_.model_id, prompt,
            SamplingKey{config_.temperature, config_.max_output_tokens,
                        config_.reasoning_strength},
            salt);
        return t;
    }

    ModelEndpointConfig config_;
    std::string bearer_;
};

}  // namespace nsg
