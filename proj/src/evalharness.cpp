#include "tdd/evalharness.hpp"

#include "tdd/baselines.hpp"
#include "tdd/engine.hpp"
#include "tdd/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace tdd {

using nlohmann::json;

double relative_probability(const DistributionRow& row, const ContrastiveSpec& spec) {
    if (!spec.has_contrast()) {
        throw InvalidSpecError("relative probability needs at least one alternative token");
    }
    const SpecMasses m = spec_masses(row, spec);
    const double total = m.target + m.alternative;
    // both masses underflowed: no evidence either way
    if (!(total > 0.0)) return 0.5;
    return m.target / total;
}

double relative_probability(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec) {
    if (!spec.has_contrast()) {
        throw InvalidSpecError("relative probability needs at least one alternative token");
    }
    return relative_probability(backend.distributions(tokens).back(), spec);
}

TokenSequence blank_except(const TokenSequence& tokens, const std::vector<bool>& keep, TokenId space,
                           std::string_view space_text) {
    TokenSequence out = tokens;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (keep[i]) continue;
        out.ids[i] = space;
        if (out.texts) (*out.texts)[i] = std::string(space_text);
    }
    return out;
}

namespace {

void check_metric_inputs(const TokenSequence& tokens, const ContrastiveSpec& spec, std::span<const double> saliency) {
    if (tokens.empty()) throw InvalidInputError("metric needs at least one prompt token");
    if (saliency.size() != tokens.size()) {
        throw InvalidInputError("saliency length " + std::to_string(saliency.size()) +
                                " does not match prompt length " + std::to_string(tokens.size()));
    }
    if (!spec.has_contrast()) throw InvalidSpecError("perturbation metrics need at least one alternative token");
}

double mean_of(const std::vector<double>& values, std::size_t skip_front) {
    double sum = 0.0;
    for (std::size_t i = skip_front; i < values.size(); ++i) sum += values[i];
    const std::size_t count = values.size() - skip_front;
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

} // namespace

MetricCurve aopc(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec,
                 std::span<const double> saliency, const MetricOptions& options) {
    check_metric_inputs(tokens, spec, saliency);
    const std::size_t n = tokens.size();
    const auto order = rank_descending(saliency);
    const TokenId space = backend.space_token();
    const std::string space_text = backend.decode(space).value_or(" ");

    MetricCurve curve;
    auto evaluate = [&](double ratio) {
        const std::size_t k = fraction_count(ratio, n);
        std::vector<bool> keep(n, false);
        for (std::size_t j = 0; j < k; ++j) keep[order[j]] = true;
        curve.ratios.push_back(ratio);
        curve.values.push_back(relative_probability(backend, blank_except(tokens, keep, space, space_text), spec));
    };
    if (options.aopc_include_zero) evaluate(0.0);
    for (double ratio : options.ratios) evaluate(ratio);
    curve.average = mean_of(curve.values, 0);
    return curve;
}

MetricCurve sufficiency(const Backend& backend, const TokenSequence& tokens, const ContrastiveSpec& spec,
                        std::span<const double> saliency, const MetricOptions& options) {
    check_metric_inputs(tokens, spec, saliency);
    const std::size_t n = tokens.size();
    const auto order = rank_descending(saliency);
    const TokenId space = backend.space_token();
    const std::string space_text = backend.decode(space).value_or(" ");

    MetricCurve curve;
    auto evaluate = [&](double ratio) {
        const std::size_t k = fraction_count(ratio, n);
        std::vector<bool> keep(n, true);
        for (std::size_t j = 0; j < k; ++j) keep[order[j]] = false;
        curve.ratios.push_back(ratio);
        curve.values.push_back(relative_probability(backend, blank_except(tokens, keep, space, space_text), spec));
    };
    evaluate(0.0);
    for (double ratio : options.ratios) evaluate(ratio);
    curve.average = mean_of(curve.values, options.sufficiency_include_zero ? 0 : 1);
    return curve;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> word_field(const json& obj, const char* singular, const char* plural, std::size_t line,
                                    bool required) {
    auto fail = [&](const std::string& what) {
        throw ParseError("line " + std::to_string(line) + ": " + what);
    };
    if (obj.contains(plural)) {
        const json& v = obj[plural];
        if (!v.is_array()) fail(std::string("field '") + plural + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& w : v) {
            if (!w.is_string()) fail(std::string("field '") + plural + "' must be an array of strings");
            out.push_back(w.get<std::string>());
        }
        if (required && out.empty()) fail(std::string("field '") + plural + "' is empty");
        return out;
    }
    if (obj.contains(singular)) {
        const json& v = obj[singular];
        if (!v.is_string()) fail(std::string("field '") + singular + "' must be a string");
        return {v.get<std::string>()};
    }
    if (required) fail(std::string("missing required field '") + singular + "' (or '" + plural + "')");
    return {};
}

} // namespace

Dataset parse_dataset(std::string_view jsonl, std::string name) {
    Dataset ds;
    ds.name = std::move(name);
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!obj.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object");
        if (!obj.contains("prompt")) {
            throw ParseError("line " + std::to_string(line_no) + ": missing required field 'prompt'");
        }
        if (!obj["prompt"].is_string() || obj["prompt"].get<std::string>().empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": field 'prompt' must be a non-empty string");
        }
        ContrastiveSample sample;
        sample.prompt = obj["prompt"].get<std::string>();
        sample.targets = word_field(obj, "target", "targets", line_no, true);
        sample.alternatives = word_field(obj, "alternative", "alternatives", line_no, false);
        sample.line = line_no;
        ds.samples.push_back(std::move(sample));
    }
    if (ds.samples.empty()) ds.warnings.push_back("dataset '" + ds.name + "' contains no samples");
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), path.stem().string());
}

// ---------------------------------------------------------------------------

std::string_view method_name(Method m) {
    switch (m) {
    case Method::tdd_forward: return "tdd-f";
    case Method::tdd_backward: return "tdd-b";
    case Method::tdd_bidirectional: return "tdd-bi";
    case Method::rollout: return "rollout";
    case Method::occlusion: return "occlusion";
    case Method::random: return "random";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : {Method::tdd_forward, Method::tdd_backward, Method::tdd_bidirectional, Method::rollout,
                     Method::occlusion, Method::random}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

std::vector<Method> parse_methods(std::string_view comma_list) {
    std::vector<Method> out;
    std::size_t start = 0;
    while (start <= comma_list.size()) {
        const auto end = std::min(comma_list.find(',', start), comma_list.size());
        const std::string_view name = comma_list.substr(start, end - start);
        if (!name.empty()) {
            auto m = parse_method(name);
            if (!m) throw InvalidInputError("unknown method '" + std::string(name) + "'");
            out.push_back(*m);
        }
        start = end + 1;
    }
    if (out.empty()) throw InvalidInputError("no methods given");
    return out;
}

std::uint64_t sample_seed(std::uint64_t base, std::size_t index) {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

SaliencyResult method_saliency(Method m, const Backend& backend, const TokenSequence& tokens,
                               const ContrastiveSpec& spec, std::uint64_t seed) {
    switch (m) {
    case Method::tdd_forward: return tdd_forward(backend, tokens, spec);
    case Method::tdd_backward: return tdd_backward(backend, tokens, spec);
    case Method::tdd_bidirectional: return tdd_bidirectional(backend, tokens, spec);
    case Method::rollout: return attention_rollout(backend, tokens);
    case Method::occlusion: return occlusion(backend, tokens, spec);
    case Method::random: return random_saliency(tokens, seed);
    }
    throw InvalidInputError("unknown method");
}

struct Prepared {
    std::optional<SampleResult> result;
    std::string skip_reason;
};

Prepared prepare_sample(const Backend& backend, const ContrastiveSample& sample, std::size_t index) {
    Prepared p;
    auto skip = [&](const std::string& why) {
        p.skip_reason = "line " + std::to_string(sample.line) + ": " + why;
        return p;
    };
    if (sample.alternatives.empty()) return skip("no alternatives; relative probability needs a contrast");

    SampleResult r;
    r.index = index;
    std::vector<TokenId> targets, alternatives;
    for (const auto& w : sample.targets) {
        auto resolved = resolve_word(backend, w);
        if (!resolved) return skip("target '" + w + "' does not resolve to a token");
        r.split_word = r.split_word || resolved->split;
        targets.push_back(resolved->id);
    }
    for (const auto& w : sample.alternatives) {
        auto resolved = resolve_word(backend, w);
        if (!resolved) return skip("alternative '" + w + "' does not resolve to a token");
        r.split_word = r.split_word || resolved->split;
        alternatives.push_back(resolved->id);
    }
    r.spec = ContrastiveSpec(targets, alternatives);
    try {
        r.spec.validate(backend.vocab_size());
    } catch (const InvalidSpecError& e) {
        return skip(e.what());
    }
    r.tokens = backend.tokenize(sample.prompt).as_sequence();
    if (r.tokens.empty()) return skip("prompt tokenizes to nothing");
    p.result = std::move(r);
    return p;
}

void evaluate_sample(const Backend& backend, SampleResult& r, std::span<const Method> methods,
                     const BenchmarkOptions& options) {
    const std::uint64_t seed = sample_seed(options.seed, r.index);
    for (Method m : methods) {
        r.saliency.push_back(method_saliency(m, backend, r.tokens, r.spec, seed));
        r.aopc.push_back(aopc(backend, r.tokens, r.spec, r.saliency.back().saliency, options.metrics));
        r.sufficiency.push_back(sufficiency(backend, r.tokens, r.spec, r.saliency.back().saliency, options.metrics));
    }
}

std::vector<double> curve_ratios_aopc(const MetricOptions& m) {
    std::vector<double> out;
    if (m.aopc_include_zero) out.push_back(0.0);
    out.insert(out.end(), m.ratios.begin(), m.ratios.end());
    return out;
}

std::vector<double> curve_ratios_sufficiency(const MetricOptions& m) {
    std::vector<double> out{0.0};
    out.insert(out.end(), m.ratios.begin(), m.ratios.end());
    return out;
}

} // namespace

EvalReport run_benchmark(const Backend& backend, const Dataset& dataset, std::span<const Method> methods,
                         const BenchmarkOptions& options) {
    if (methods.empty()) throw InvalidInputError("benchmark needs at least one method");
    for (double r : options.metrics.ratios) {
        if (!(r > 0.0 && r <= 1.0)) throw InvalidInputError("ratios must lie in (0, 1]");
    }

    EvalReport report;
    report.dataset = dataset.name;
    report.aopc_ratios = curve_ratios_aopc(options.metrics);
    report.sufficiency_ratios = curve_ratios_sufficiency(options.metrics);

    std::vector<SampleResult> pending;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        Prepared p = prepare_sample(backend, dataset.samples[i], i);
        if (!p.result) {
            ++report.skipped;
            report.skip_reasons.push_back(std::move(p.skip_reason));
            continue;
        }
        if (p.result->split_word) ++report.split_words;
        pending.push_back(std::move(*p.result));
    }

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(pending.size())));
    if (jobs <= 1) {
        for (auto& r : pending) evaluate_sample(backend, r, methods, options);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < pending.size(); i = next++) {
                    try {
                        evaluate_sample(backend, pending[i], methods, options);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = pending.size();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    report.n_samples = pending.size();
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MethodSummary s;
        s.method = methods[mi];
        s.aopc_curve.assign(report.aopc_ratios.size(), 0.0);
        s.sufficiency_curve.assign(report.sufficiency_ratios.size(), 0.0);
        for (const auto& r : pending) {
            for (std::size_t k = 0; k < s.aopc_curve.size(); ++k) s.aopc_curve[k] += r.aopc[mi].values[k];
            for (std::size_t k = 0; k < s.sufficiency_curve.size(); ++k) {
                s.sufficiency_curve[k] += r.sufficiency[mi].values[k];
            }
            s.aopc_average += r.aopc[mi].average;
            s.sufficiency_average += r.sufficiency[mi].average;
        }
        if (!pending.empty()) {
            const double count = static_cast<double>(pending.size());
            for (double& v : s.aopc_curve) v /= count;
            for (double& v : s.sufficiency_curve) v /= count;
            s.aopc_average /= count;
            s.sufficiency_average /= count;
        }
        report.methods.push_back(std::move(s));
    }
    report.samples = std::move(pending);
    return report;
}

namespace {

EvalReport aggregate(std::span<const EvalReport> reports, bool by_sample, std::string name) {
    if (reports.empty()) throw InvalidInputError("nothing to aggregate");
    const EvalReport& first = reports.front();
    EvalReport out;
    out.dataset = std::move(name);
    out.aopc_ratios = first.aopc_ratios;
    out.sufficiency_ratios = first.sufficiency_ratios;
    for (const auto& m : first.methods) {
        MethodSummary s;
        s.method = m.method;
        s.aopc_curve.assign(first.aopc_ratios.size(), 0.0);
        s.sufficiency_curve.assign(first.sufficiency_ratios.size(), 0.0);
        out.methods.push_back(std::move(s));
    }

    double total_weight = 0.0;
    for (const auto& r : reports) {
        if (r.methods.size() != first.methods.size() || r.aopc_ratios != first.aopc_ratios ||
            r.sufficiency_ratios != first.sufficiency_ratios) {
            throw InvalidInputError("reports disagree on methods or ratios");
        }
        out.n_samples += r.n_samples;
        out.skipped += r.skipped;
        out.split_words += r.split_words;
        if (r.n_samples == 0) continue;
        const double weight = by_sample ? static_cast<double>(r.n_samples) : 1.0;
        total_weight += weight;
        for (std::size_t mi = 0; mi < r.methods.size(); ++mi) {
            const auto& src = r.methods[mi];
            auto& dst = out.methods[mi];
            if (src.method != dst.method) throw InvalidInputError("reports disagree on method order");
            for (std::size_t k = 0; k < dst.aopc_curve.size(); ++k) dst.aopc_curve[k] += weight * src.aopc_curve[k];
            for (std::size_t k = 0; k < dst.sufficiency_curve.size(); ++k) {
                dst.sufficiency_curve[k] += weight * src.sufficiency_curve[k];
            }
            dst.aopc_average += weight * src.aopc_average;
            dst.sufficiency_average += weight * src.sufficiency_average;
        }
    }
    if (total_weight > 0.0) {
        for (auto& m : out.methods) {
            for (double& v : m.aopc_curve) v /= total_weight;
            for (double& v : m.sufficiency_curve) v /= total_weight;
            m.aopc_average /= total_weight;
            m.sufficiency_average /= total_weight;
        }
    }
    return out;
}

} // namespace

EvalReport aggregate_by_dataset(std::span<const EvalReport> reports) {
    return aggregate(reports, false, "all:dataset-mean");
}

EvalReport aggregate_by_sample(std::span<const EvalReport> reports) {
    return aggregate(reports, true, "all:sample-mean");
}

} // namespace tdd
