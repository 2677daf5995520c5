#pragma once

#include "tdd/backend.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdd {

struct ToyConfig {
    std::uint64_t seed = 42;
    std::size_t vocab_size = 512;
    std::size_t num_layers = 4;
    std::size_t num_heads = 4;
    std::size_t dim = 64;
    std::size_t context = 256;
};

// Word-level tokenizer over a fixed English word list. Id 0 is the space
// token, id 1 is <unk>, then list words, then synthetic "w<id>" fillers when
// the vocabulary is larger than the list. Lookup is case-insensitive;
// punctuation splits into its own piece.
class ToyTokenizer {
public:
    static constexpr TokenId kSpace = 0;
    static constexpr TokenId kUnknown = 1;

    explicit ToyTokenizer(std::size_t vocab_size);

    Tokenization tokenize(std::string_view text) const;
    const std::string& piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return pieces_.size(); }

private:
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, TokenId> lookup_;
};

// Deterministic GPT2-shaped causal transformer: learned positional
// embeddings, pre-norm blocks (causal multi-head attention + GELU MLP),
// final layer norm, LM head tied to the token embedding. Weights are seeded
// Gaussians (std 0.02, layer-norm gains 1). Everything runs in double and
// each position only reads keys/values at or before it, so row i of a full
// pass is bitwise equal to the last row of the pass over the i-prefix.
class ToyTransformer final : public Backend {
public:
    // Throws ConfigError for V < 8, L < 2, heads == 0, dim % heads != 0 or
    // context == 0.
    explicit ToyTransformer(const ToyConfig& config);
    ~ToyTransformer() override;

    ToyTransformer(const ToyTransformer&) = delete;
    ToyTransformer& operator=(const ToyTransformer&) = delete;

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    DistributionMatrix distributions(const TokenSequence& tokens) const override;
    AttentionStack attentions(const TokenSequence& tokens) const override;
    LayerDistributionStack layer_distributions(const TokenSequence& tokens) const override;
    Tokenization tokenize(std::string_view text) const override;
    std::optional<std::string> decode(TokenId id) const override;
    std::optional<TokenId> unknown_token() const override { return ToyTokenizer::kUnknown; }
    TokenId space_token() const override { return ToyTokenizer::kSpace; }

    // Raw final-layer logits, [n][V].
    std::vector<std::vector<double>> logits(const TokenSequence& tokens) const;
    // Logit-lens logits for layers 1..L, [L][n][V].
    std::vector<std::vector<std::vector<double>>> layer_logits(const TokenSequence& tokens) const;

    const ToyConfig& config() const { return config_; }

private:
    struct Weights;
    struct Trace;

    void forward(const TokenSequence& tokens, Trace& trace) const;

    ToyConfig config_;
    BackendDescriptor descriptor_;
    ToyTokenizer tokenizer_;
    std::unique_ptr<Weights> weights_;
};

std::unique_ptr<ToyTransformer> make_toy_backend(const ToyConfig& config);

// Built-in word list used by the toy tokenizer (without the two reserved ids).
const std::vector<std::string>& toy_word_list();

} // namespace tdd
