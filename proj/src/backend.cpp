#include "tdd/backend.hpp"

#include "tdd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tdd {

AttentionStack::AttentionStack(std::size_t layers, std::size_t heads, std::size_t positions)
    : layers_(layers), heads_(heads), positions_(positions),
      data_(layers * heads * positions * positions, 0.0) {}

AttentionStack Backend::attentions(const TokenSequence&) const {
    require_capability(false, "attentions");
    return {};
}

LayerDistributionStack Backend::layer_distributions(const TokenSequence&) const {
    require_capability(false, "layer_states");
    return {};
}

TokenSequence Backend::generate(const TokenSequence& tokens, int max_new,
                                const SamplingParams& sampling) const {
    require_capability(descriptor().capabilities.generate, "generate");
    return sample_continuation(*this, tokens, max_new, sampling);
}

std::optional<std::string> Backend::decode(TokenId) const { return std::nullopt; }

std::optional<TokenId> Backend::unknown_token() const { return std::nullopt; }

TokenId Backend::space_token() const {
    const Tokenization t = tokenize(" ");
    if (t.ids.empty()) throw ConfigError("backend tokenizer produced no id for a single space");
    return t.ids.front();
}

void Backend::require_capability(bool present, std::string_view what) const {
    if (!present) {
        throw UnsupportedCapabilityError("backend '" + descriptor().model_name +
                                         "' does not support " + std::string(what));
    }
}

TokenId sample_token(const DistributionRow& row, const SamplingParams& sampling, double uniform) {
    if (sampling.temperature <= 0.0) return static_cast<TokenId>(row.argmax());

    const std::size_t v = row.size();
    const double p_max = row.probs[row.argmax()];
    std::vector<double> weights(v);
    for (std::size_t i = 0; i < v; ++i) {
        weights[i] = row.probs[i] > 0.0
                         ? std::exp((std::log(row.probs[i]) - std::log(p_max)) / sampling.temperature)
                         : 0.0;
    }
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);

    std::vector<std::size_t> order(v);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });

    std::size_t keep = v;
    if (sampling.top_p < 1.0) {
        double cumulative = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
            cumulative += weights[order[i]] / total;
            if (cumulative >= sampling.top_p) {
                keep = i + 1;
                break;
            }
        }
        total = 0.0;
        for (std::size_t i = 0; i < keep; ++i) total += weights[order[i]];
    }

    const double threshold = uniform * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        cumulative += weights[order[i]];
        if (threshold < cumulative) return static_cast<TokenId>(order[i]);
    }
    return static_cast<TokenId>(order[keep - 1]);
}

TokenSequence sample_continuation(const Backend& backend, const TokenSequence& prompt, int max_new,
                                  const SamplingParams& sampling) {
    if (max_new < 1) throw InvalidInputError("max_new must be at least 1");
    const auto& desc = backend.descriptor();
    if (desc.context_length > 0 && prompt.size() + static_cast<std::size_t>(max_new) > desc.context_length) {
        throw CapacityError("prompt of " + std::to_string(prompt.size()) + " tokens plus " +
                            std::to_string(max_new) + " new tokens exceeds context length " +
                            std::to_string(desc.context_length));
    }

    std::mt19937_64 rng(sampling.seed);
    TokenSequence running = prompt;
    running.texts.reset();
    TokenSequence generated;
    std::vector<std::string> texts;
    bool all_decoded = true;
    for (int step = 0; step < max_new; ++step) {
        const DistributionMatrix dist = backend.distributions(running);
        const double uniform = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const TokenId next = sample_token(dist.back(), sampling, uniform);
        running.ids.push_back(next);
        generated.ids.push_back(next);
        if (auto text = backend.decode(next)) {
            texts.push_back(std::move(*text));
        } else {
            all_decoded = false;
        }
    }
    if (all_decoded) generated.texts = std::move(texts);
    return generated;
}

std::optional<ResolvedWord> resolve_word(const Backend& backend, std::string_view word) {
    auto first = word.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return std::nullopt;
    auto last = word.find_last_not_of(" \t\r\n");
    const std::string trimmed(word.substr(first, last - first + 1));

    const Tokenization t = backend.tokenize(" " + trimmed);
    if (t.ids.empty()) return std::nullopt;
    const auto unk = backend.unknown_token();
    if (unk && t.ids.front() == *unk) return std::nullopt;
    return ResolvedWord{trimmed, t.ids.front(), t.ids.size() > 1};
}

} // namespace tdd
