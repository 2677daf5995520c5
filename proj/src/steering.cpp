#include "tdd/steering.hpp"

#include "tdd/engine.hpp"
#include "tdd/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tdd {

using nlohmann::json;

std::vector<std::string> parse_wordlist(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        words.push_back(line.substr(first, last - first + 1));
    }
    return words;
}

std::vector<std::string> load_wordlist(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open word list " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_wordlist(buf.str());
}

WordList resolve_wordlist(const Backend& backend, std::vector<std::string> words) {
    WordList out;
    out.words = std::move(words);
    for (const auto& w : out.words) {
        auto r = resolve_word(backend, w);
        if (!r) {
            out.dropped.push_back(w);
            continue;
        }
        if (r->split) out.split.push_back(w);
        out.resolved_ids.push_back(r->id);
    }
    std::sort(out.resolved_ids.begin(), out.resolved_ids.end());
    out.resolved_ids.erase(std::unique(out.resolved_ids.begin(), out.resolved_ids.end()), out.resolved_ids.end());
    return out;
}

std::vector<std::size_t> find_triggers(const SaliencyResult& saliency, double fraction, std::size_t min_k) {
    if (fraction < 0.0 || fraction > 1.0) throw InvalidInputError("trigger fraction must lie in [0, 1]");
    const std::size_t n = saliency.saliency.size();
    const std::size_t k = std::min(n, std::max(fraction_count(fraction, n), min_k));
    auto order = rank_descending(saliency.saliency);
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

namespace {

void append_wordlist_warnings(const WordList& list, const char* label, std::vector<std::string>& warnings) {
    for (const auto& w : list.dropped) warnings.push_back(std::string(label) + " word '" + w + "' has no token");
    for (const auto& w : list.split) {
        warnings.push_back(std::string(label) + " word '" + w + "' splits into several tokens; first kept");
    }
}

SteeringOutcome finish(const Backend& backend, const TokenSequence& prompt, SaliencyResult saliency,
                       std::vector<std::size_t> positions, TokenId replacement, int max_new,
                       const SamplingParams& sampling) {
    SteeringOutcome out;
    out.original = prompt;
    out.modified = prompt;
    const std::string text = backend.decode(replacement).value_or(std::string());
    for (std::size_t p : positions) out.modified = out.modified.with_replaced(p, replacement, text);
    out.replaced_positions = std::move(positions);
    out.saliency = std::move(saliency);
    out.continuation = backend.generate(out.modified, max_new, sampling);
    return out;
}

} // namespace

SteeringOutcome suppress_toxicity(const Backend& backend, const TokenSequence& prompt, const WordList& toxic_words,
                                  const DetoxOptions& options) {
    if (toxic_words.resolved_ids.empty()) {
        throw InvalidSpecError("toxic word list resolves to no tokens");
    }
    if (!backend.descriptor().capabilities.generate) {
        throw UnsupportedCapabilityError("toxicity suppression needs a backend that can generate");
    }
    const ContrastiveSpec spec = options.complement_alternatives
                                     ? ContrastiveSpec::against_all(toxic_words.resolved_ids)
                                     : ContrastiveSpec::target_only(toxic_words.resolved_ids);
    SaliencyResult saliency = tdd_saliency(options.variant, backend, prompt, spec);
    auto positions = find_triggers(saliency, options.fraction, options.min_k);
    SteeringOutcome out = finish(backend, prompt, std::move(saliency), std::move(positions), backend.space_token(),
                                 options.max_new, options.sampling);
    append_wordlist_warnings(toxic_words, "toxic", out.warnings);
    return out;
}

ContrastiveSpec sentiment_spec(SentimentDirection direction, const WordList& positive_words,
                               const WordList& negative_words) {
    std::vector<TokenId> pos, neg;
    std::set_difference(positive_words.resolved_ids.begin(), positive_words.resolved_ids.end(),
                        negative_words.resolved_ids.begin(), negative_words.resolved_ids.end(),
                        std::back_inserter(pos));
    std::set_difference(negative_words.resolved_ids.begin(), negative_words.resolved_ids.end(),
                        positive_words.resolved_ids.begin(), positive_words.resolved_ids.end(),
                        std::back_inserter(neg));
    if (pos.empty()) throw InvalidSpecError("positive word list resolves to no usable tokens");
    if (neg.empty()) throw InvalidSpecError("negative word list resolves to no usable tokens");
    return direction == SentimentDirection::positive ? ContrastiveSpec(neg, pos) : ContrastiveSpec(pos, neg);
}

SteeringOutcome steer_sentiment(const Backend& backend, const TokenSequence& prompt, SentimentDirection direction,
                                const WordList& positive_words, const WordList& negative_words,
                                const SteerOptions& options) {
    const ContrastiveSpec spec = sentiment_spec(direction, positive_words, negative_words);
    if (!backend.descriptor().capabilities.generate) {
        throw UnsupportedCapabilityError("sentiment steering needs a backend that can generate");
    }
    const std::string key = direction == SentimentDirection::positive ? "positive" : "negative";
    const auto resolved = resolve_word(backend, key);
    if (!resolved) throw ConfigError("key token '" + key + "' is not in the backend vocabulary");

    SaliencyResult saliency = tdd_saliency(options.variant, backend, prompt, spec);
    auto positions = find_triggers(saliency, 0.0, 1);
    SteeringOutcome out = finish(backend, prompt, std::move(saliency), std::move(positions), resolved->id,
                                 options.max_new, options.sampling);
    if (resolved->split) out.warnings.push_back("key token '" + key + "' splits into several tokens; first kept");
    append_wordlist_warnings(positive_words, "positive", out.warnings);
    append_wordlist_warnings(negative_words, "negative", out.warnings);
    return out;
}

double dist_n(std::span<const TokenSequence> corpus, int n) {
    if (n < 1) throw InvalidInputError("Dist-n needs n >= 1");
    if (corpus.empty()) throw InvalidInputError("Dist-n needs at least one generation");
    const auto width = static_cast<std::size_t>(n);
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& seq : corpus) {
        if (seq.size() < width) continue;
        std::vector<std::vector<TokenId>> grams;
        for (std::size_t i = 0; i + width <= seq.size(); ++i) {
            grams.emplace_back(seq.ids.begin() + static_cast<std::ptrdiff_t>(i),
                               seq.ids.begin() + static_cast<std::ptrdiff_t>(i + width));
        }
        const std::size_t total = grams.size();
        std::sort(grams.begin(), grams.end());
        const auto unique = static_cast<std::size_t>(std::unique(grams.begin(), grams.end()) - grams.begin());
        sum += static_cast<double>(unique) / static_cast<double>(total);
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

namespace {

json sequence_json(const TokenSequence& s) {
    json j{{"ids", s.ids}};
    if (s.texts) j["texts"] = *s.texts;
    return j;
}

} // namespace

std::string outcome_to_json(const SteeringOutcome& outcome) {
    json j;
    j["original"] = sequence_json(outcome.original);
    j["modified"] = sequence_json(outcome.modified);
    j["replaced_positions"] = outcome.replaced_positions;
    j["continuation"] = sequence_json(outcome.continuation);
    j["variant"] = std::string(to_string(outcome.saliency.variant));
    j["saliency"] = outcome.saliency.saliency;
    j["warnings"] = outcome.warnings;
    return j.dump(2);
}

} // namespace tdd
