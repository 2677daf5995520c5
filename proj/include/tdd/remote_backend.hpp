#pragma once

#include "tdd/backend.hpp"

#include <mutex>
#include <string>

namespace tdd {

struct RemoteOptions {
    double timeout_seconds = 120.0;
};

// Client for the JSON-over-HTTP logits protocol:
//   GET  /v1/info      -> {vocab_size, num_layers, num_heads, model_name}
//   POST /v1/forward   -> {logits, attentions?, layer_logits?}
//   POST /v1/generate  -> {tokens, texts}
//   POST /v1/tokenize  -> {tokens, texts}
// Logits travel as 32-bit floats; softmax runs here in double. Transport
// failures surface as TransportError and are never retried.
class RemoteBackend final : public Backend {
public:
    // Contacts /v1/info immediately; throws TransportError when unreachable.
    explicit RemoteBackend(std::string base_url, RemoteOptions options = {});

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    DistributionMatrix distributions(const TokenSequence& tokens) const override;
    AttentionStack attentions(const TokenSequence& tokens) const override;
    LayerDistributionStack layer_distributions(const TokenSequence& tokens) const override;
    TokenSequence generate(const TokenSequence& tokens, int max_new,
                           const SamplingParams& sampling) const override;
    Tokenization tokenize(std::string_view text) const override;
    TokenId space_token() const override;

    const std::string& base_url() const { return base_url_; }

private:
    std::string post(const std::string& path, const std::string& body) const;
    std::string get(const std::string& path) const;

    std::string base_url_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    RemoteOptions options_;
    BackendDescriptor descriptor_;

    mutable std::once_flag space_once_;
    mutable TokenId space_token_ = 0;
};

} // namespace tdd
