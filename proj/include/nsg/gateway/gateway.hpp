#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "nsg/gateway/endpoint.hpp"
#include "nsg/gateway/http_client.hpp"
#include "nsg/gateway/rate_limiter.hpp"
#include "nsg/gateway/simulated.hpp"
#include "nsg/gateway/transcript.hpp"
#include "nsg/gateway/transcript_cache.hpp"

namespace nsg {

enum class ModelKind { remote, simulated_reference, simulated_predictor };

// One participating model: either a remote endpoint or a deterministic
// simulated stand-in. Reference-side and predictor-side simulants are
// distinct kinds because they consume different inputs.
struct ModelSpec {
    std::string model_id;
    std::string family;
    ModelKind kind = ModelKind::remote;
    ModelEndpointConfig endpoint;   // kind == remote
    SimulatedModelSpec simulated;   // kind == simulated_reference
    PredictorStrategy strategy = PredictorStrategy::rule_following;  // simulated_predictor
    std::uint64_t weights_seed = 0;  // != 0: derive per-dataset weights from this seed

    bool is_simulated() const { return kind != ModelKind::remote; }
};

struct CallContext {
    const Record* record = nullptr;  // simulated reference models score this
    const LabelVocabulary* vocabulary = nullptr;
    AnswerOrder answer_order = AnswerOrder::answer_last;
    std::uint64_t sim_seed = 0;
    std::uint64_t salt = 0;  // distinct rollouts of one prompt
};

// Single stateful component of the pipeline: executes prompts against models,
// caches every call, and enforces per-model rate limits. Safe for concurrent
// use by any number of workers.
class ModelGateway {
public:
    explicit ModelGateway(std::filesystem::path cache_dir) : cache_(std::move(cache_dir)) {}

    TranscriptRecord complete(const ModelSpec& model, const std::string& prompt,
                              const CallContext& context = {}) {
        const SamplingKey sampling =
            model.kind == ModelKind::remote
                ? SamplingKey{model.endpoint.temperature, model.endpoint.max_output_tokens,
                              model.endpoint.reasoning_strength}
                : SamplingKey{};
        const std::string id =
            transcript_digest(model.model_id, prompt, sampling, context.salt);
        if (auto cached = cache_.lookup(model.model_id, id)) return *cached;

        TranscriptRecord record;
        switch (model.kind) {
            case ModelKind::remote: {
                limiter_for(model).acquire();
                record = client_for(model).complete(prompt, context.salt);
                break;
            }
            case ModelKind::simulated_reference: {
                if (!context.record || !context.vocabulary) {
                    throw ConfigError("simulated reference model '" + model.model_id +
                                      "' needs the record and vocabulary in the call context");
                }
                record.raw_output = simulate_reference(*context.record, model.simulated,
                                                       context.sim_seed, *context.vocabulary,
                                                       context.answer_order, context.salt);
                break;
            }
            case ModelKind::simulated_predictor: {
                if (!context.vocabulary) {
                    throw ConfigError("simulated predictor model '" + model.model_id +
                                      "' needs the vocabulary in the call context");
                }
                record.raw_output =
                    simulate_predictor(prompt, model.strategy, *context.vocabulary).raw_output;
                break;
            }
        }
        record.transcript_id = id;
        record.model_id = model.model_id;
        record.prompt = prompt;
        record.cache_salt = context.salt;
        cache_.insert(record);
        return record;
    }

    TranscriptCache& cache() { return cache_; }

private:
    RateLimiter& limiter_for(const ModelSpec& model) {
        std::scoped_lock lock(mutex_);
        auto it = limiters_.find(model.model_id);
        if (it == limiters_.end()) {
            it = limiters_
                     .emplace(model.model_id,
                              std::make_unique<RateLimiter>(model.endpoint.requests_per_minute))
                     .first;
        }
        return *it->second;
    }

    ChatCompletionClient& client_for(const ModelSpec& model) {
        std::scoped_lock lock(mutex_);
        auto it = clients_.find(model.model_id);
        if (it == clients_.end()) {
            it = clients_
                     .emplace(model.model_id,
                              std::make_unique<ChatCompletionClient>(model.endpoint))
                     .first;
        }
        return *it->second;
    }

    TranscriptCache cache_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
    std::map<std::string, std::unique_ptr<ChatCompletionClient>> clients_;
};

}  // namespace nsg
