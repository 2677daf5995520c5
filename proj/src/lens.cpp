#include "tdd/lens.hpp"

#include "tdd/errors.hpp"
#include "tdd/report.hpp"

#include <json.hpp>

#include <cmath>

namespace tdd {

double kl_divergence(const DistributionRow& p, const DistributionRow& q) {
    if (p.size() != q.size()) throw InvalidInputError("KL divergence between rows of different length");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.probs[i] == 0.0) continue;
        if (q.probs[i] == 0.0) {
            throw InvalidInputError("KL divergence undefined: q[" + std::to_string(i) + "] is 0 where p is not");
        }
        kl += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
    }
    return kl;
}

namespace {

void require_layers(const Backend& backend) {
    if (!backend.descriptor().capabilities.layer_states) {
        throw UnsupportedCapabilityError("layer analysis needs a backend that exposes layer states");
    }
}

// Adds per-layer KL sums for one prompt into `sums`; returns positions seen.
std::size_t accumulate_kl(const Backend& backend, const TokenSequence& tokens, std::vector<double>& sums) {
    const LayerDistributionStack stack = backend.layer_distributions(tokens);
    if (stack.size() == 0) throw InvalidInputError("backend returned no layers");
    const DistributionMatrix& last = stack.back();
    if (sums.empty()) sums.assign(stack.size(), 0.0);
    if (sums.size() != stack.size()) throw InvalidInputError("layer count changed between prompts");
    for (std::size_t l = 0; l < stack.size(); ++l) {
        for (std::size_t i = 0; i < last.size(); ++i) sums[l] += kl_divergence(stack[l][i], last[i]);
    }
    return last.size();
}

} // namespace

std::vector<double> kl_convergence(const Backend& backend, const TokenSequence& tokens) {
    return kl_convergence(backend, std::span<const TokenSequence>(&tokens, 1));
}

std::vector<double> kl_convergence(const Backend& backend, std::span<const TokenSequence> prompts) {
    require_layers(backend);
    if (prompts.empty()) throw InvalidInputError("KL convergence needs at least one prompt");
    std::vector<double> sums;
    std::size_t positions = 0;
    for (const auto& p : prompts) positions += accumulate_kl(backend, p, sums);
    for (double& s : sums) s /= static_cast<double>(positions);
    return sums;
}

std::vector<std::vector<TopToken>> top_token_trace(const Backend& backend, const TokenSequence& tokens) {
    require_layers(backend);
    const LayerDistributionStack stack = backend.layer_distributions(tokens);
    std::vector<std::vector<TopToken>> trace(stack.size());
    for (std::size_t l = 0; l < stack.size(); ++l) {
        for (const auto& row : stack[l].rows) {
            const std::size_t best = row.argmax();
            const auto id = static_cast<TokenId>(best);
            trace[l].push_back(TopToken{id, backend.decode(id), row.probs[best]});
        }
    }
    return trace;
}

void write_kl_csv(std::ostream& out, std::span<const double> kl) {
    out << "layer,mean_kl\n";
    for (std::size_t l = 0; l < kl.size(); ++l) out << (l + 1) << ',' << format_double(kl[l]) << '\n';
}

std::string top_token_trace_json(const std::vector<std::vector<TopToken>>& trace) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < trace.size(); ++l) {
        nlohmann::json positions = nlohmann::json::array();
        for (const auto& t : trace[l]) {
            nlohmann::json entry{{"id", t.id}, {"probability", t.probability}};
            entry["text"] = t.text ? nlohmann::json(*t.text) : nlohmann::json(nullptr);
            positions.push_back(std::move(entry));
        }
        layers.push_back({{"layer", l + 1}, {"positions", std::move(positions)}});
    }
    return layers.dump(2);
}

} // namespace tdd
