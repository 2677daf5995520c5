#pragma once

#include "tdd/backend.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tdd {

// KL(p || q) in nats with 0 * log(0 / q) = 0. Throws InvalidInputError when
// p > 0 where q == 0 (cannot happen for softmax outputs).
double kl_divergence(const DistributionRow& p, const DistributionRow& q);

// Entry l is the mean over positions of KL(layer l || final layer);
// the final entry is exactly 0.
std::vector<double> kl_convergence(const Backend& backend, const TokenSequence& tokens);

// Unweighted mean over every (prompt, position) pair.
std::vector<double> kl_convergence(const Backend& backend, std::span<const TokenSequence> prompts);

struct TopToken {
    TokenId id = 0;
    std::optional<std::string> text;
    double probability = 0.0;
};

// [layer][position] argmax of each logit-lens distribution.
std::vector<std::vector<TopToken>> top_token_trace(const Backend& backend, const TokenSequence& tokens);

// "layer,mean_kl" with layers numbered from 1.
void write_kl_csv(std::ostream& out, std::span<const double> kl);

std::string top_token_trace_json(const std::vector<std::vector<TopToken>>& trace);

} // namespace tdd
