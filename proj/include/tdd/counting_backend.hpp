#pragma once

#include "tdd/backend.hpp"

#include <atomic>

namespace tdd {

// Pass-through wrapper that counts model invocations. Thread-safe.
class CountingBackend final : public Backend {
public:
    explicit CountingBackend(const Backend& inner) : inner_(inner) {}

    const BackendDescriptor& descriptor() const override { return inner_.descriptor(); }

    DistributionMatrix distributions(const TokenSequence& tokens) const override {
        ++forward_calls_;
        return inner_.distributions(tokens);
    }
    AttentionStack attentions(const TokenSequence& tokens) const override {
        ++attention_calls_;
        return inner_.attentions(tokens);
    }
    LayerDistributionStack layer_distributions(const TokenSequence& tokens) const override {
        ++layer_calls_;
        return inner_.layer_distributions(tokens);
    }
    TokenSequence generate(const TokenSequence& tokens, int max_new,
                           const SamplingParams& sampling) const override {
        ++generate_calls_;
        return inner_.generate(tokens, max_new, sampling);
    }
    Tokenization tokenize(std::string_view text) const override { return inner_.tokenize(text); }
    std::optional<std::string> decode(TokenId id) const override { return inner_.decode(id); }
    std::optional<TokenId> unknown_token() const override { return inner_.unknown_token(); }
    TokenId space_token() const override { return inner_.space_token(); }

    std::size_t forward_calls() const { return forward_calls_.load(); }
    std::size_t attention_calls() const { return attention_calls_.load(); }
    std::size_t layer_calls() const { return layer_calls_.load(); }
    std::size_t generate_calls() const { return generate_calls_.load(); }

    void reset() {
        forward_calls_ = 0;
        attention_calls_ = 0;
        layer_calls_ = 0;
        generate_calls_ = 0;
    }

private:
    const Backend& inner_;
    mutable std::atomic<std::size_t> forward_calls_{0};
    mutable std::atomic<std::size_t> attention_calls_{0};
    mutable std::atomic<std::size_t> layer_calls_{0};
    mutable std::atomic<std::size_t> generate_calls_{0};
};

} // namespace tdd
