#pragma once

#include "tdd/backend.hpp"
#include "tdd/core.hpp"

#include <span>
#include <vector>

namespace tdd {

// Token distribution dynamics saliency.
//
// Forward: r_i is the contrastive confidence of the final-layer distribution
// at position i (one causal pass gives every prefix); c_1 = r_1 and
// c_i = r_i - r_{i-1}.
//
// Backward: r_i is the contrastive confidence at the last position of the
// suffix w_i..w_n fed as a fresh prompt (n passes); c_n = r_n and
// c_i = r_i - r_{i+1}.
//
// Bidirectional: elementwise sum of the two.
SaliencyResult tdd_forward(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec);
SaliencyResult tdd_backward(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec);
SaliencyResult tdd_bidirectional(const Backend& backend, const TokenSequence& tokens,
                                 const ContrastiveSpec& spec);

// Same as tdd_bidirectional but also hands back the constituents.
struct BidirectionalParts {
    SaliencyResult forward;
    SaliencyResult backward;
    SaliencyResult combined;
};
BidirectionalParts tdd_bidirectional_parts(const Backend& backend, const TokenSequence& tokens,
                                           const ContrastiveSpec& spec);

SaliencyResult tdd_saliency(Variant variant, const Backend& backend, const TokenSequence& tokens,
                            const ContrastiveSpec& spec);

// Difference rules over an already computed r-trace.
std::vector<double> forward_differences(std::span<const double> r);
std::vector<double> backward_differences(std::span<const double> r);
SaliencyResult combine_bidirectional(const SaliencyResult& forward, const SaliencyResult& backward);

} // namespace tdd
