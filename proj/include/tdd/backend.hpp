#pragma once

#include "tdd/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdd {

struct Capabilities {
    bool all_position_logits = true;
    bool attentions = false;
    bool layer_states = false;
    bool generate = false;
};

struct BackendDescriptor {
    std::size_t vocab_size = 0;
    std::size_t num_layers = 0;
    std::size_t num_heads = 0;
    std::size_t context_length = 0; // 0 when the backend does not advertise one
    std::string model_name;
    Capabilities capabilities;
};

// Attention weights indexed [layer][head][query][key], causal and
// row-stochastic over keys 0..query.
class AttentionStack {
public:
    AttentionStack() = default;
    AttentionStack(std::size_t layers, std::size_t heads, std::size_t positions);

    std::size_t layers() const { return layers_; }
    std::size_t heads() const { return heads_; }
    std::size_t positions() const { return positions_; }

    double& at(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) {
        return data_[index(layer, head, query, key)];
    }
    double at(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) const {
        return data_[index(layer, head, query, key)];
    }

private:
    std::size_t index(std::size_t l, std::size_t h, std::size_t q, std::size_t k) const {
        return ((l * heads_ + h) * positions_ + q) * positions_ + k;
    }

    std::size_t layers_ = 0;
    std::size_t heads_ = 0;
    std::size_t positions_ = 0;
    std::vector<double> data_;
};

// Logit-lens view: one DistributionMatrix per layer 1..L (index 0 is layer 1).
struct LayerDistributionStack {
    std::vector<DistributionMatrix> layers;

    std::size_t size() const { return layers.size(); }
    const DistributionMatrix& operator[](std::size_t l) const { return layers[l]; }
    const DistributionMatrix& back() const { return layers.back(); }
};

struct SamplingParams {
    double temperature = 1.0; // 0 selects greedy decoding
    double top_p = 1.0;
    std::uint64_t seed = 0;
};

struct Tokenization {
    std::vector<TokenId> ids;
    std::vector<std::string> texts;

    TokenSequence as_sequence() const { return TokenSequence(ids, texts); }
};

// Model access contract. All query methods are logically read-only and must
// be callable concurrently; results never depend on call interleaving.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    // One causal pass; row i is softmax of the final-layer logits at position i.
    virtual DistributionMatrix distributions(const TokenSequence& tokens) const = 0;

    virtual AttentionStack attentions(const TokenSequence& tokens) const;
    virtual LayerDistributionStack layer_distributions(const TokenSequence& tokens) const;

    // Returns only the max_new appended tokens.
    virtual TokenSequence generate(const TokenSequence& tokens, int max_new,
                                   const SamplingParams& sampling) const;

    virtual Tokenization tokenize(std::string_view text) const = 0;

    // Decoded text for one id when the backend can decode without a round trip.
    virtual std::optional<std::string> decode(TokenId id) const;

    // Id the tokenizer uses for unknown pieces, if it has one.
    virtual std::optional<TokenId> unknown_token() const;

    // Neutral replacement token; defaults to the first id of tokenize(" ").
    virtual TokenId space_token() const;

    std::size_t vocab_size() const { return descriptor().vocab_size; }

protected:
    void require_capability(bool present, std::string_view what) const;
};

// Shared decoding loop over distributions(): temperature scaling, nucleus
// truncation, then an inverse-CDF draw from a seeded mt19937_64. Greedy when
// temperature == 0 (ties resolve to the lowest id).
TokenSequence sample_continuation(const Backend& backend, const TokenSequence& prompt, int max_new,
                                  const SamplingParams& sampling);

// Single draw from a distribution under the sampling rule above; `uniform`
// must lie in [0, 1).
TokenId sample_token(const DistributionRow& row, const SamplingParams& sampling, double uniform);

// A word resolved to a single vocabulary id in continuation position
// (encoded with a leading space). `split` is set when the tokenizer produced
// several subword ids and only the first was kept.
struct ResolvedWord {
    std::string word;
    TokenId id = 0;
    bool split = false;
};

// Returns nullopt when the word produces no ids or only the unknown token.
std::optional<ResolvedWord> resolve_word(const Backend& backend, std::string_view word);

} // namespace tdd
