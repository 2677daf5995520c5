#pragma once

#include "tdd/backend.hpp"
#include "tdd/core.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tdd {

struct WordList {
    std::vector<std::string> words;
    std::vector<TokenId> resolved_ids; // sorted, unique
    std::vector<std::string> dropped;  // words with no usable id
    std::vector<std::string> split;    // words that needed several subwords (first kept)
};

// One word per line; '#' starts a comment; blank lines ignored.
std::vector<std::string> parse_wordlist(std::string_view text);
std::vector<std::string> load_wordlist(const std::filesystem::path& path);

// Leading-space resolution, as for evaluation targets.
WordList resolve_wordlist(const Backend& backend, std::vector<std::string> words);

// The max(ceil(fraction * n), min_k) highest-saliency positions (capped at n),
// ties to the lower index, returned in ascending position order.
std::vector<std::size_t> find_triggers(const SaliencyResult& saliency, double fraction, std::size_t min_k);

struct SteeringOutcome {
    TokenSequence original;
    TokenSequence modified;
    std::vector<std::size_t> replaced_positions;
    TokenSequence continuation;
    SaliencyResult saliency;
    std::vector<std::string> warnings;
};

struct DetoxOptions {
    double fraction = 0.15;
    std::size_t min_k = 1;
    int max_new = 20;
    SamplingParams sampling;
    // Every non-toxic token is an alternative; off means target-only.
    bool complement_alternatives = true;
    Variant variant = Variant::bidirectional;
};

// Finds toxic triggers with TDD and blanks them with the space token, then
// generates from the neutralised prompt.
SteeringOutcome suppress_toxicity(const Backend& backend, const TokenSequence& prompt, const WordList& toxic_words,
                                  const DetoxOptions& options = {});

enum class SentimentDirection { positive, negative };

struct SteerOptions {
    int max_new = 20;
    SamplingParams sampling;
    Variant variant = Variant::bidirectional;
};

// direction == positive: targets are the negative words, alternatives the
// positive ones, and the single most salient token becomes "positive".
// direction == negative mirrors both roles and uses "negative".
SteeringOutcome steer_sentiment(const Backend& backend, const TokenSequence& prompt, SentimentDirection direction,
                                const WordList& positive_words, const WordList& negative_words,
                                const SteerOptions& options = {});

// The contrastive spec steer_sentiment uses for a direction.
ContrastiveSpec sentiment_spec(SentimentDirection direction, const WordList& positive_words,
                               const WordList& negative_words);

// Mean over generations of unique n-grams / total n-grams. Generations
// shorter than n are left out; returns 0 when none qualify.
double dist_n(std::span<const TokenSequence> corpus, int n);

// {"original", "modified", "replaced_positions", "continuation", ...}
std::string outcome_to_json(const SteeringOutcome& outcome);

} // namespace tdd
