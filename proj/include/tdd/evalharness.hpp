#pragma once

#include "tdd/backend.hpp"
#include "tdd/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tdd {

// ---------------------------------------------------------------------------
// Relative probability and the perturbation metrics
// ---------------------------------------------------------------------------

// Softmax restricted to the union of target and alternative logits at one
// position, target mass summed: sum_T p / (sum_T p + sum_A p). Because the
// row is itself a softmax, this equals the restricted softmax of the logits.
// Throws InvalidSpecError when the spec has no contrast.
double relative_probability(const DistributionRow& row, const ContrastiveSpec& spec);

// Relative probability at the final position of `tokens`.
double relative_probability(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec);

struct MetricOptions {
    std::vector<double> ratios{0.2, 0.4, 0.6, 0.8, 1.0};
    bool aopc_include_zero = false;       // add the fully blanked point to the AOPC average
    bool sufficiency_include_zero = true; // add the intact-prompt point to the sufficiency average
};

struct MetricCurve {
    std::vector<double> ratios;
    std::vector<double> values;
    double average = 0.0;
};

// Start fully blanked with the space token, restore the ceil(ratio * n)
// highest-saliency tokens (ties to the lower index) per ratio, record the
// relative probability. Higher is better.
MetricCurve aopc(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec,
                 std::span<const double> saliency, const MetricOptions& options = {});

// Start intact, blank the ceil(ratio * n) highest-saliency tokens per ratio,
// record the relative probability. Lower is better.
MetricCurve sufficiency(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec,
                        std::span<const double> saliency, const MetricOptions& options = {});

// Copy of `tokens` with every position where keep[i] is false replaced by `space`.
TokenSequence blank_except(const TokenSequence& tokens, const std::vector<bool>& keep, TokenId space,
                           std::string_view space_text);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct ContrastiveSample {
    std::string prompt;
    std::vector<std::string> targets;
    std::vector<std::string> alternatives;
    std::size_t line = 0;
};

struct Dataset {
    std::string name;
    std::vector<ContrastiveSample> samples;
    std::vector<std::string> warnings;
};

// JSONL, one object per line: "prompt" plus "target"/"alternative" strings
// or "targets"/"alternatives" arrays. Blank lines are ignored. Throws
// ParseError naming the line and field on malformed input.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view jsonl, std::string name);

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

enum class Method { tdd_forward, tdd_backward, tdd_bidirectional, rollout, occlusion, random };

std::string_view method_name(Method m);
// Accepts tdd-f, tdd-b, tdd-bi, rollout, occlusion, random.
std::optional<Method> parse_method(std::string_view name);
std::vector<Method> parse_methods(std::string_view comma_list);

struct BenchmarkOptions {
    MetricOptions metrics;
    std::uint64_t seed = 0; // random-saliency seed base
    unsigned jobs = 1;
};

struct SampleResult {
    std::size_t index = 0; // position in the dataset
    TokenSequence tokens;
    ContrastiveSpec spec;
    bool split_word = false; // a target/alternative word spanned several subwords
    std::vector<SaliencyResult> saliency; // per method, same order as EvalReport::methods
    std::vector<MetricCurve> aopc;
    std::vector<MetricCurve> sufficiency;
};

struct MethodSummary {
    Method method = Method::random;
    std::vector<double> aopc_curve;
    double aopc_average = 0.0;
    std::vector<double> sufficiency_curve;
    double sufficiency_average = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::size_t n_samples = 0; // evaluated samples
    std::size_t skipped = 0;
    std::size_t split_words = 0;
    std::vector<std::string> skip_reasons;
    std::vector<double> aopc_ratios;
    std::vector<double> sufficiency_ratios;
    std::vector<MethodSummary> methods;
    std::vector<SampleResult> samples;
};

// Resolves words to ids with a leading space (first subword when split),
// computes each method's saliency once per sample and averages both metrics.
// Samples without a usable contrast are skipped and counted. Backend errors
// abort the run. Output is independent of `jobs`.
EvalReport run_benchmark(const Backend& backend, const Dataset& dataset, std::span<const Method> methods,
                         const BenchmarkOptions& options = {});

// Cross-dataset aggregation: each dataset weighted equally, and each sample
// weighted equally. Reports must share methods and ratios.
EvalReport aggregate_by_dataset(std::span<const EvalReport> reports);
EvalReport aggregate_by_sample(std::span<const EvalReport> reports);

// Seed used for the random baseline of sample `index`.
std::uint64_t sample_seed(std::uint64_t base, std::size_t index);

} // namespace tdd
