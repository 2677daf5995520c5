// tdd: command-line front end for token-distribution-dynamics saliency.
//
//   tdd explain --prompt "..." --target word [--alt word] [--variant ...] [--format text|json|html]
//   tdd eval    --dataset d.jsonl [--dataset ...] --out report.csv [--html report.html]
//   tdd detox   --prompt "..." --wordlist toxic.txt
//   tdd steer   --prompt "..." --direction positive --pos-words p.txt --neg-words n.txt
//   tdd lens    --prompt "..." --out kl.csv
//
// --backend takes "toy" or a base URL for the HTTP logits protocol; it falls
// back to $TDD_BACKEND_URL, then "toy". Exit codes: 0 ok, 1 runtime/backend
// failure, 2 usage or validation error.

#include "tdd/backend.hpp"
#include "tdd/engine.hpp"
#include "tdd/errors.hpp"
#include "tdd/evalharness.hpp"
#include "tdd/lens.hpp"
#include "tdd/remote_backend.hpp"
#include "tdd/report.hpp"
#include "tdd/steering.hpp"
#include "tdd/toy_backend.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Error raised for bad flags or inputs detected by the CLI itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendArgs {
    std::string backend;
    std::uint64_t toy_seed = 42;
    std::size_t toy_vocab = 512;
    std::size_t toy_layers = 4;
};

void add_backend_options(CLI::App* cmd, BackendArgs& args) {
    cmd->add_option("--backend", args.backend, "\"toy\" or a base URL (default: $TDD_BACKEND_URL, then toy)");
    cmd->add_option("--toy-seed", args.toy_seed, "toy backend weight seed")->capture_default_str();
    cmd->add_option("--toy-vocab", args.toy_vocab, "toy backend vocabulary size")->capture_default_str();
    cmd->add_option("--toy-layers", args.toy_layers, "toy backend layer count")->capture_default_str();
}

std::unique_ptr<tdd::Backend> make_backend(const BackendArgs& args) {
    std::string choice = args.backend;
    if (choice.empty()) {
        const char* env = std::getenv("TDD_BACKEND_URL");
        choice = env && *env ? env : "toy";
    }
    if (choice == "toy") {
        tdd::ToyConfig cfg;
        cfg.seed = args.toy_seed;
        cfg.vocab_size = args.toy_vocab;
        cfg.num_layers = args.toy_layers;
        return tdd::make_toy_backend(cfg);
    }
    try {
        return std::make_unique<tdd::RemoteBackend>(choice);
    } catch (const tdd::TransportError& e) {
        // an unreachable --backend is a bad argument, not a mid-run failure
        throw UsageError(std::string("backend unreachable: ") + e.what());
    }
}

tdd::TokenSequence tokenize_prompt(const tdd::Backend& backend, const std::string& prompt) {
    tdd::TokenSequence tokens = backend.tokenize(prompt).as_sequence();
    if (tokens.empty()) throw UsageError("prompt produced no tokens");
    return tokens;
}

tdd::TokenId resolve_or_fail(const tdd::Backend& backend, const std::string& word, const char* role) {
    auto r = tdd::resolve_word(backend, word);
    if (!r) throw UsageError(std::string(role) + " word '" + word + "' does not resolve to a token");
    if (r->split) {
        std::cerr << "warning: " << role << " word '" << word << "' splits into several tokens; using the first\n";
    }
    return r->id;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

tdd::SamplingParams sampling_from(double temperature, double top_p, std::uint64_t seed) {
    return tdd::SamplingParams{temperature, top_p, seed};
}

// ---------------------------------------------------------------------------

struct ExplainArgs {
    BackendArgs backend;
    std::string prompt;
    std::vector<std::string> targets;
    std::vector<std::string> alternatives;
    std::string variant = "bidirectional";
    std::string format = "text";
    std::string out;
};

int run_explain(const ExplainArgs& args) {
    const auto backend = make_backend(args.backend);
    const auto tokens = tokenize_prompt(*backend, args.prompt);
    std::vector<tdd::TokenId> targets, alternatives;
    for (const auto& w : args.targets) targets.push_back(resolve_or_fail(*backend, w, "target"));
    for (const auto& w : args.alternatives) alternatives.push_back(resolve_or_fail(*backend, w, "alternative"));
    const tdd::ContrastiveSpec spec(targets, alternatives);

    tdd::Variant variant = tdd::Variant::bidirectional;
    if (args.variant == "forward") variant = tdd::Variant::forward;
    else if (args.variant == "backward") variant = tdd::Variant::backward;

    const tdd::SaliencyResult result = tdd::tdd_saliency(variant, *backend, tokens, spec);

    std::string rendered;
    if (args.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            arr.push_back({{"token", tokens.text_at(i)}, {"id", tokens.ids[i]}, {"saliency", result.saliency[i]}});
        }
        rendered = arr.dump(2) + "\n";
    } else if (args.format == "html") {
        std::ostringstream page;
        tdd::write_explanation_html(page, tokens, result, "Saliency: " + args.prompt);
        rendered = page.str();
    } else {
        std::ostringstream text;
        text << "variant: " << tdd::to_string(variant) << "\n";
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            char line[128];
            std::snprintf(line, sizeof line, "%4zu  %-16s % .6f\n", i, tokens.text_at(i).c_str(), result.saliency[i]);
            text << line;
        }
        rendered = text.str();
    }
    if (args.out.empty()) {
        std::cout << rendered;
    } else {
        write_file(args.out, rendered);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    BackendArgs backend;
    std::vector<std::string> datasets;
    std::string methods = "tdd-f,tdd-b,tdd-bi,rollout,occlusion,random";
    std::string out;
    std::string html;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

int run_eval(const EvalArgs& args) {
    const auto methods = tdd::parse_methods(args.methods);
    const auto backend = make_backend(args.backend);

    tdd::BenchmarkOptions options;
    options.seed = args.seed;
    options.jobs = args.jobs;

    std::vector<tdd::EvalReport> reports;
    for (const auto& path : args.datasets) {
        const tdd::Dataset ds = tdd::load_dataset(path);
        for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
        reports.push_back(tdd::run_benchmark(*backend, ds, methods, options));
        for (const auto& why : reports.back().skip_reasons) {
            std::cerr << "skipped (" << ds.name << ") " << why << "\n";
        }
    }
    std::vector<tdd::EvalReport> all = reports;
    if (reports.size() > 1) {
        all.push_back(tdd::aggregate_by_dataset(reports));
        all.push_back(tdd::aggregate_by_sample(reports));
    }

    std::ostringstream csv;
    tdd::write_report_csv(csv, all);
    write_file(args.out, csv.str());
    if (!args.html.empty()) {
        std::ostringstream page;
        tdd::write_report_html(page, all);
        write_file(args.html, page.str());
    }

    for (const auto& r : all) {
        std::printf("%s (%zu samples, %zu skipped)\n", r.dataset.c_str(), r.n_samples, r.skipped);
        for (const auto& m : r.methods) {
            std::printf("  %-10s AOPC %6.2f  Suff %6.2f\n", std::string(tdd::method_name(m.method)).c_str(),
                        100.0 * m.aopc_average, 100.0 * m.sufficiency_average);
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct GenerationArgs {
    std::uint64_t seed = 0;
    int max_new = 20;
    double temperature = 1.0;
    double top_p = 1.0;
};

void add_generation_options(CLI::App* cmd, GenerationArgs& g) {
    cmd->add_option("--seed", g.seed, "sampling seed")->capture_default_str();
    cmd->add_option("--max-new", g.max_new, "tokens to generate")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--temperature", g.temperature, "sampling temperature, 0 = greedy")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--top-p", g.top_p, "nucleus threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

struct DetoxArgs {
    BackendArgs backend;
    GenerationArgs gen;
    std::string prompt;
    std::string wordlist;
    double fraction = 0.15;
    bool target_only = false;
};

int run_detox(const DetoxArgs& args) {
    const auto backend = make_backend(args.backend);
    const auto tokens = tokenize_prompt(*backend, args.prompt);
    const tdd::WordList toxic = tdd::resolve_wordlist(*backend, tdd::load_wordlist(args.wordlist));
    tdd::DetoxOptions options;
    options.fraction = args.fraction;
    options.max_new = args.gen.max_new;
    options.sampling = sampling_from(args.gen.temperature, args.gen.top_p, args.gen.seed);
    options.complement_alternatives = !args.target_only;
    const auto outcome = tdd::suppress_toxicity(*backend, tokens, toxic, options);
    std::cout << tdd::outcome_to_json(outcome) << "\n";
    return 0;
}

struct SteerArgs {
    BackendArgs backend;
    GenerationArgs gen;
    std::string prompt;
    std::string direction;
    std::string pos_words;
    std::string neg_words;
};

int run_steer(const SteerArgs& args) {
    const auto backend = make_backend(args.backend);
    const auto tokens = tokenize_prompt(*backend, args.prompt);
    const auto pos = tdd::resolve_wordlist(*backend, tdd::load_wordlist(args.pos_words));
    const auto neg = tdd::resolve_wordlist(*backend, tdd::load_wordlist(args.neg_words));
    tdd::SteerOptions options;
    options.max_new = args.gen.max_new;
    options.sampling = sampling_from(args.gen.temperature, args.gen.top_p, args.gen.seed);
    const auto direction =
        args.direction == "positive" ? tdd::SentimentDirection::positive : tdd::SentimentDirection::negative;
    const auto outcome = tdd::steer_sentiment(*backend, tokens, direction, pos, neg, options);
    std::cout << tdd::outcome_to_json(outcome) << "\n";
    return 0;
}

struct LensArgs {
    BackendArgs backend;
    std::vector<std::string> prompts;
    std::string out;
    std::string trace;
};

int run_lens(const LensArgs& args) {
    const auto backend = make_backend(args.backend);
    std::vector<tdd::TokenSequence> prompts;
    for (const auto& p : args.prompts) prompts.push_back(tokenize_prompt(*backend, p));
    const auto kl = tdd::kl_convergence(*backend, prompts);
    std::ostringstream csv;
    tdd::write_kl_csv(csv, kl);
    if (args.out.empty()) {
        std::cout << csv.str();
    } else {
        write_file(args.out, csv.str());
    }
    if (!args.trace.empty()) write_file(args.trace, tdd::top_token_trace_json(tdd::top_token_trace(*backend, prompts.front())) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Token distribution dynamics: contrastive input saliency for causal language models"};
    app.require_subcommand(1);

    ExplainArgs explain;
    auto* explain_cmd = app.add_subcommand("explain", "per-token saliency for one prompt");
    add_backend_options(explain_cmd, explain.backend);
    explain_cmd->add_option("--prompt", explain.prompt, "prompt text")->required();
    explain_cmd->add_option("--target", explain.targets, "target word (repeatable)")->required();
    explain_cmd->add_option("--alt", explain.alternatives, "alternative word (repeatable; omit for target-only)");
    explain_cmd->add_option("--variant", explain.variant)
        ->check(CLI::IsMember({"forward", "backward", "bidirectional"}))
        ->capture_default_str();
    explain_cmd->add_option("--format", explain.format)->check(CLI::IsMember({"text", "json", "html"}))->capture_default_str();
    explain_cmd->add_option("--out", explain.out, "write to a file instead of stdout");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "AOPC / sufficiency benchmark over JSONL datasets");
    add_backend_options(eval_cmd, eval.backend);
    eval_cmd->add_option("--dataset", eval.datasets, "JSONL dataset (repeatable)")->required();
    eval_cmd->add_option("--methods", eval.methods, "comma-separated methods")->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "CSV report path")->required();
    eval_cmd->add_option("--html", eval.html, "HTML report path");
    eval_cmd->add_option("--seed", eval.seed, "random-baseline seed")->capture_default_str();
    eval_cmd->add_option("--jobs", eval.jobs, "samples evaluated in parallel")->capture_default_str()->check(CLI::PositiveNumber);

    DetoxArgs detox;
    auto* detox_cmd = app.add_subcommand("detox", "neutralise toxic triggers, then generate");
    add_backend_options(detox_cmd, detox.backend);
    add_generation_options(detox_cmd, detox.gen);
    detox_cmd->add_option("--prompt", detox.prompt)->required();
    detox_cmd->add_option("--wordlist", detox.wordlist, "toxic words, one per line")->required();
    detox_cmd->add_option("--fraction", detox.fraction, "fraction of tokens treated as triggers")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    detox_cmd->add_flag("--target-only", detox.target_only, "ignore alternatives instead of contrasting with all other tokens");

    SteerArgs steer;
    auto* steer_cmd = app.add_subcommand("steer", "replace the main sentiment cue with a key token, then generate");
    add_backend_options(steer_cmd, steer.backend);
    add_generation_options(steer_cmd, steer.gen);
    steer_cmd->add_option("--prompt", steer.prompt)->required();
    steer_cmd->add_option("--direction", steer.direction)->required()->check(CLI::IsMember({"positive", "negative"}));
    steer_cmd->add_option("--pos-words", steer.pos_words)->required();
    steer_cmd->add_option("--neg-words", steer.neg_words)->required();

    LensArgs lens;
    auto* lens_cmd = app.add_subcommand("lens", "per-layer KL divergence to the final layer");
    add_backend_options(lens_cmd, lens.backend);
    lens_cmd->add_option("--prompt", lens.prompts, "prompt text (repeatable)")->required();
    lens_cmd->add_option("--out", lens.out, "CSV path (stdout when omitted)");
    lens_cmd->add_option("--trace", lens.trace, "JSON path for the per-layer top-token trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*explain_cmd) return run_explain(explain);
        if (*eval_cmd) return run_eval(eval);
        if (*detox_cmd) return run_detox(detox);
        if (*steer_cmd) return run_steer(steer);
        if (*lens_cmd) return run_lens(lens);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tdd::InvalidSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tdd::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tdd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tdd::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
