#include "tdd/engine.hpp"

#include "tdd/errors.hpp"

namespace tdd {

namespace {

void check_inputs(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec) {
    if (tokens.empty()) throw InvalidInputError("saliency needs at least one prompt token");
    spec.validate(backend.vocab_size());
}

} // namespace

std::vector<double> forward_differences(std::span<const double> r) {
    std::vector<double> c(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) c[i] = i == 0 ? r[0] : r[i] - r[i - 1];
    return c;
}

std::vector<double> backward_differences(std::span<const double> r) {
    const std::size_t n = r.size();
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = i + 1 == n ? r[i] : r[i] - r[i + 1];
    return c;
}

SaliencyResult combine_bidirectional(const SaliencyResult& forward, const SaliencyResult& backward) {
    if (forward.saliency.size() != backward.saliency.size()) {
        throw InvalidInputError("forward and backward saliency lengths differ");
    }
    SaliencyResult out;
    out.variant = Variant::bidirectional;
    out.saliency.resize(forward.saliency.size());
    for (std::size_t i = 0; i < out.saliency.size(); ++i) {
        out.saliency[i] = forward.saliency[i] + backward.saliency[i];
    }
    out.r_trace = forward.r_trace;
    return out;
}

SaliencyResult tdd_forward(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec) {
    check_inputs(backend, tokens, spec);
    const DistributionMatrix dist = backend.distributions(tokens);
    SaliencyResult out;
    out.variant = Variant::forward;
    out.r_trace.reserve(dist.size());
    for (const auto& row : dist.rows) out.r_trace.push_back(contrastive_confidence(row, spec));
    out.saliency = forward_differences(out.r_trace);
    return out;
}

SaliencyResult tdd_backward(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec) {
    check_inputs(backend, tokens, spec);
    const std::size_t n = tokens.size();
    SaliencyResult out;
    out.variant = Variant::backward;
    out.r_trace.assign(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        const DistributionMatrix dist = backend.distributions(tokens.suffix(k));
        out.r_trace[k] = contrastive_confidence(dist.back(), spec);
    }
    out.saliency = backward_differences(out.r_trace);
    return out;
}

BidirectionalParts tdd_bidirectional_parts(const Backend& backend, const TokenSequence& tokens,
                                           const ContrastiveSpec& spec) {
    BidirectionalParts parts;
    parts.forward = tdd_forward(backend, tokens, spec);
    parts.backward = tdd_backward(backend, tokens, spec);
    parts.combined = combine_bidirectional(parts.forward, parts.backward);
    return parts;
}

SaliencyResult tdd_bidirectional(const Backend& backend, const TokenSequence& tokens,
                                 const ContrastiveSpec& spec) {
    return tdd_bidirectional_parts(backend, tokens, spec).combined;
}

SaliencyResult tdd_saliency(Variant variant, const Backend& backend, const TokenSequence& tokens,
                            const ContrastiveSpec& spec) {
    switch (variant) {
    case Variant::forward: return tdd_forward(backend, tokens, spec);
    case Variant::backward: return tdd_backward(backend, tokens, spec);
    case Variant::bidirectional: return tdd_bidirectional(backend, tokens, spec);
    default: break;
    }
    throw InvalidInputError("'" + std::string(to_string(variant)) + "' is not a TDD variant");
}

} // namespace tdd
