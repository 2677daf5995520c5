#include "tdd/baselines.hpp"

#include "tdd/errors.hpp"

#include <random>

namespace tdd {

namespace {

using Square = std::vector<double>; // row-major n x n

Square mixed_layer(const AttentionStack& attention, std::size_t layer, const RolloutOptions& options) {
    const std::size_t n = attention.positions();
    const std::size_t heads = attention.heads();
    Square m(n * n, 0.0);
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t k = 0; k < n; ++k) {
            double mean = 0.0;
            for (std::size_t h = 0; h < heads; ++h) mean += attention.at(layer, h, q, k);
            mean /= static_cast<double>(heads);
            m[q * n + k] = (1.0 - options.identity_weight) * mean + (q == k ? options.identity_weight : 0.0);
        }
        if (options.renormalize) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) sum += m[q * n + k];
            if (sum > 0.0) {
                for (std::size_t k = 0; k < n; ++k) m[q * n + k] /= sum;
            }
        }
    }
    return m;
}

Square multiply(const Square& a, const Square& b, std::size_t n) {
    Square out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double x = a[i * n + k];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * b[k * n + j];
        }
    }
    return out;
}

} // namespace

std::vector<std::vector<double>> rollout_products(const AttentionStack& attention, const RolloutOptions& options) {
    if (attention.layers() == 0 || attention.heads() == 0 || attention.positions() == 0) {
        throw InvalidInputError("attention rollout needs at least one layer, head and position");
    }
    const std::size_t n = attention.positions();
    std::vector<Square> products;
    products.reserve(attention.layers());
    for (std::size_t l = 0; l < attention.layers(); ++l) {
        Square mixed = mixed_layer(attention, l, options);
        products.push_back(l == 0 ? std::move(mixed) : multiply(mixed, products.back(), n));
    }
    return products;
}

std::vector<double> rollout_from_attentions(const AttentionStack& attention, const RolloutOptions& options) {
    const auto products = rollout_products(attention, options);
    const std::size_t n = attention.positions();
    const Square& top = products.back();
    return {top.begin() + static_cast<std::ptrdiff_t>((n - 1) * n), top.end()};
}

SaliencyResult attention_rollout(const Backend& backend, const TokenSequence& tokens, const RolloutOptions& options) {
    if (!backend.descriptor().capabilities.attentions) {
        throw UnsupportedCapabilityError("attention rollout needs a backend that exposes attentions");
    }
    SaliencyResult out;
    out.variant = Variant::rollout;
    out.saliency = rollout_from_attentions(backend.attentions(tokens), options);
    return out;
}

SaliencyResult occlusion(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec) {
    if (tokens.empty()) throw InvalidInputError("occlusion needs at least one prompt token");
    spec.validate(backend.vocab_size());
    const TokenId space = backend.space_token();
    const std::string space_text = backend.decode(space).value_or(" ");

    const double full = contrastive_confidence(backend.distributions(tokens).back(), spec);
    SaliencyResult out;
    out.variant = Variant::occlusion;
    out.saliency.resize(tokens.size());
    out.r_trace.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const TokenSequence occluded = tokens.with_replaced(i, space, space_text);
        out.r_trace[i] = contrastive_confidence(backend.distributions(occluded).back(), spec);
        out.saliency[i] = full - out.r_trace[i];
    }
    return out;
}

SaliencyResult random_saliency(const TokenSequence& tokens, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SaliencyResult out;
    out.variant = Variant::random;
    out.saliency.resize(tokens.size());
    for (double& s : out.saliency) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return out;
}

} // namespace tdd
