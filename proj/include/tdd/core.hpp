#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdd {

using TokenId = std::int32_t;

// A prompt as vocabulary ids, optionally paired with the decoded piece of
// every id. Backends validate ids against their vocabulary on entry.
struct TokenSequence {
    std::vector<TokenId> ids;
    std::optional<std::vector<std::string>> texts;

    TokenSequence() = default;
    explicit TokenSequence(std::vector<TokenId> ids_);
    TokenSequence(std::vector<TokenId> ids_, std::vector<std::string> texts_);

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }

    // Throws InvalidInputError when empty, when an id is outside [0, vocab_size),
    // or when texts has the wrong length.
    void validate(std::size_t vocab_size) const;

    // Tokens [first, first + count); texts follow along when present.
    TokenSequence slice(std::size_t first, std::size_t count) const;
    TokenSequence suffix(std::size_t first) const { return slice(first, size() - first); }

    // Copy with position `pos` replaced. `text` is only used when texts exist.
    TokenSequence with_replaced(std::size_t pos, TokenId id, std::string_view text) const;

    std::string text_at(std::size_t pos) const;
};

// Next-token distribution at one position, held in 64-bit arithmetic.
struct DistributionRow {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }

    // Numerically stable softmax (max-subtracted, summed in index order).
    static DistributionRow from_logits(std::span<const double> logits);
    static DistributionRow from_logits(std::span<const float> logits);

    // Checks sum-to-one within `tol` and every entry in [0, 1].
    bool is_normalized(double tol = 1e-5) const;
    std::size_t argmax() const;
};

// One row per input position; row i is conditioned on tokens 0..i only.
struct DistributionMatrix {
    std::vector<DistributionRow> rows;

    std::size_t size() const { return rows.size(); }
    const DistributionRow& operator[](std::size_t i) const { return rows[i]; }
    const DistributionRow& back() const { return rows.back(); }
};

// Target set T and alternative set A for a contrastive question
// "why T rather than A". Sets are stored sorted and deduplicated.
// Empty alternatives encodes the target-only mode; complement_alternatives
// means A = V \ T and the stored alternatives are ignored.
struct ContrastiveSpec {
    std::vector<TokenId> targets;
    std::vector<TokenId> alternatives;
    bool complement_alternatives = false;

    ContrastiveSpec() = default;
    ContrastiveSpec(std::vector<TokenId> targets_, std::vector<TokenId> alternatives_,
                    bool complement = false);

    static ContrastiveSpec pair(TokenId target, TokenId alternative);
    static ContrastiveSpec target_only(std::vector<TokenId> targets);
    static ContrastiveSpec against_all(std::vector<TokenId> targets);

    bool has_contrast() const { return complement_alternatives || !alternatives.empty(); }

    // Role swap (T <-> A). Not defined for complement specs.
    ContrastiveSpec swapped() const;

    // Throws InvalidSpecError on empty targets, overlap, or ids >= vocab_size.
    void validate(std::size_t vocab_size) const;
};

enum class Variant { forward, backward, bidirectional, rollout, occlusion, random };

std::string_view to_string(Variant v);

struct SaliencyResult {
    Variant variant = Variant::forward;
    std::vector<double> saliency;
    // Intermediate confidences r_i; empty for rollout and random.
    std::vector<double> r_trace;
};

struct SpecMasses {
    double target = 0.0;
    double alternative = 0.0;
};

// Probability mass of the target set and of the alternative set.
SpecMasses spec_masses(const DistributionRow& row, const ContrastiveSpec& spec);

// sum_{t in T} row[t] - sum_{a in A} row[a]. Throws InvalidSpecError when the
// spec references ids outside the row.
double contrastive_confidence(const DistributionRow& row, const ContrastiveSpec& spec);

// Positions ordered by descending value; ties go to the lower index.
std::vector<std::size_t> rank_descending(std::span<const double> values);

// ceil(fraction * n) clamped to [0, n], tolerant of representation error
// (0.6 * 5 must give 3, not 4).
std::size_t fraction_count(double fraction, std::size_t n);

} // namespace tdd
