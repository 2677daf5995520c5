#pragma once

#include "tdd/backend.hpp"
#include "tdd/core.hpp"

#include <cstdint>

namespace tdd {

struct RolloutOptions {
    double identity_weight = 0.5; // residual mix: (1-w)*mean_heads(A) + w*I
    bool renormalize = true;
};

// Attention rollout over a precomputed stack. Per layer the heads are
// averaged, mixed with the identity, optionally row-renormalized, and the
// layers are multiplied bottom-up (R = M_L ... M_1). Returns the last row of R.
std::vector<double> rollout_from_attentions(const AttentionStack& attention, const RolloutOptions& options = {});

// The full layer-by-layer rollout products, one per layer; exposed for tests.
std::vector<std::vector<double>> rollout_products(const AttentionStack& attention,
                                                  const RolloutOptions& options = {});

// Non-contrastive; throws UnsupportedCapabilityError without attentions.
SaliencyResult attention_rollout(const Backend& backend, const TokenSequence& tokens,
                                 const RolloutOptions& options = {});

// Leave-one-out by replacement with the backend's space token:
// c_i = r_full - r(with token i spaced), r taken at the final position.
// r_trace holds the n occluded confidences. n + 1 backend calls.
SaliencyResult occlusion(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec);

// Seeded uniform [0, 1) scores.
SaliencyResult random_saliency(const TokenSequence& tokens, std::uint64_t seed);

} // namespace tdd
