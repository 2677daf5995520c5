#include "tdd/core.hpp"

#include "tdd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tdd {

namespace {

std::vector<TokenId> sorted_unique(std::vector<TokenId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

template <typename T>
DistributionRow softmax_impl(std::span<const T> logits) {
    DistributionRow row;
    row.probs.resize(logits.size());
    if (logits.empty()) return row;
    double max_logit = -INFINITY;
    for (T l : logits) max_logit = std::max(max_logit, static_cast<double>(l));
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(static_cast<double>(logits[i]) - max_logit);
        row.probs[i] = e;
        sum += e;
    }
    for (double& p : row.probs) p /= sum;
    return row;
}

} // namespace

TokenSequence::TokenSequence(std::vector<TokenId> ids_) : ids(std::move(ids_)) {}

TokenSequence::TokenSequence(std::vector<TokenId> ids_, std::vector<std::string> texts_)
    : ids(std::move(ids_)), texts(std::move(texts_)) {}

void TokenSequence::validate(std::size_t vocab_size) const {
    if (ids.empty()) throw InvalidInputError("token sequence is empty");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab_size) {
            throw InvalidInputError("token id " + std::to_string(ids[i]) + " at position " +
                                    std::to_string(i) + " outside vocabulary of size " +
                                    std::to_string(vocab_size));
        }
    }
    if (texts && texts->size() != ids.size()) {
        throw InvalidInputError("token texts length " + std::to_string(texts->size()) +
                                " does not match ids length " + std::to_string(ids.size()));
    }
}

TokenSequence TokenSequence::slice(std::size_t first, std::size_t count) const {
    TokenSequence out;
    out.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(first),
                   ids.begin() + static_cast<std::ptrdiff_t>(first + count));
    if (texts) {
        out.texts.emplace(texts->begin() + static_cast<std::ptrdiff_t>(first),
                          texts->begin() + static_cast<std::ptrdiff_t>(first + count));
    }
    return out;
}

TokenSequence TokenSequence::with_replaced(std::size_t pos, TokenId id, std::string_view text) const {
    TokenSequence out = *this;
    out.ids.at(pos) = id;
    if (out.texts) (*out.texts).at(pos) = std::string(text);
    return out;
}

std::string TokenSequence::text_at(std::size_t pos) const {
    if (texts) return (*texts)[pos];
    return "<" + std::to_string(ids[pos]) + ">";
}

DistributionRow DistributionRow::from_logits(std::span<const double> logits) {
    return softmax_impl(logits);
}

DistributionRow DistributionRow::from_logits(std::span<const float> logits) {
    return softmax_impl(logits);
}

bool DistributionRow::is_normalized(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

std::size_t DistributionRow::argmax() const {
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

ContrastiveSpec::ContrastiveSpec(std::vector<TokenId> targets_, std::vector<TokenId> alternatives_,
                                 bool complement)
    : targets(sorted_unique(std::move(targets_))),
      alternatives(complement ? std::vector<TokenId>{} : sorted_unique(std::move(alternatives_))),
      complement_alternatives(complement) {}

ContrastiveSpec ContrastiveSpec::pair(TokenId target, TokenId alternative) {
    return ContrastiveSpec({target}, {alternative});
}

ContrastiveSpec ContrastiveSpec::target_only(std::vector<TokenId> targets) {
    return ContrastiveSpec(std::move(targets), {});
}

ContrastiveSpec ContrastiveSpec::against_all(std::vector<TokenId> targets) {
    return ContrastiveSpec(std::move(targets), {}, true);
}

ContrastiveSpec ContrastiveSpec::swapped() const {
    if (complement_alternatives) throw InvalidSpecError("cannot swap a complement-alternatives spec");
    if (alternatives.empty()) throw InvalidSpecError("cannot swap a target-only spec");
    return ContrastiveSpec(alternatives, targets);
}

void ContrastiveSpec::validate(std::size_t vocab_size) const {
    if (targets.empty()) throw InvalidSpecError("contrastive spec has no target tokens");
    auto check_range = [&](TokenId id, const char* role) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
            throw InvalidSpecError(std::string(role) + " token id " + std::to_string(id) +
                                   " outside vocabulary of size " + std::to_string(vocab_size));
        }
    };
    for (TokenId t : targets) check_range(t, "target");
    if (complement_alternatives) {
        if (targets.size() >= vocab_size) {
            throw InvalidSpecError("complement of the target set is empty");
        }
        return;
    }
    for (TokenId a : alternatives) check_range(a, "alternative");
    std::vector<TokenId> overlap;
    std::set_intersection(targets.begin(), targets.end(), alternatives.begin(), alternatives.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
        throw InvalidSpecError("token id " + std::to_string(overlap.front()) +
                               " is both a target and an alternative");
    }
}

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::forward: return "forward";
    case Variant::backward: return "backward";
    case Variant::bidirectional: return "bidirectional";
    case Variant::rollout: return "rollout";
    case Variant::occlusion: return "occlusion";
    case Variant::random: return "random";
    }
    return "unknown";
}

SpecMasses spec_masses(const DistributionRow& row, const ContrastiveSpec& spec) {
    spec.validate(row.size());
    double target_mass = 0.0;
    for (TokenId t : spec.targets) target_mass += row.probs[static_cast<std::size_t>(t)];

    double alternative_mass = 0.0;
    if (spec.complement_alternatives) {
        // explicit sum over V \ T; targets is sorted so a single merge pass works
        auto next_target = spec.targets.begin();
        for (std::size_t v = 0; v < row.size(); ++v) {
            if (next_target != spec.targets.end() && static_cast<std::size_t>(*next_target) == v) {
                ++next_target;
                continue;
            }
            alternative_mass += row.probs[v];
        }
    } else {
        for (TokenId a : spec.alternatives) alternative_mass += row.probs[static_cast<std::size_t>(a)];
    }
    return {target_mass, alternative_mass};
}

double contrastive_confidence(const DistributionRow& row, const ContrastiveSpec& spec) {
    const SpecMasses m = spec_masses(row, spec);
    return m.target - m.alternative;
}

std::vector<std::size_t> rank_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

std::size_t fraction_count(double fraction, std::size_t n) {
    if (!(fraction > 0.0)) return 0;
    const double scaled = fraction * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9));
    return std::min(k, n);
}

} // namespace tdd
