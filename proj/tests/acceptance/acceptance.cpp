// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Reference values come from the oracles in tests/support,
// never from the code under test.

#include "support/oracles.hpp"
#include "support/planted.hpp"
#include "tdd/baselines.hpp"
#include "tdd/counting_backend.hpp"
#include "tdd/engine.hpp"
#include "tdd/evalharness.hpp"
#include "tdd/lens.hpp"
#include "tdd/steering.hpp"
#include "tdd/toy_backend.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace tdd;
using namespace tdd::testing;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

TokenSequence random_prompt(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
    std::uniform_int_distribution<TokenId> d(0, static_cast<TokenId>(vocab) - 1);
    TokenSequence s;
    for (std::size_t i = 0; i < n; ++i) s.ids.push_back(d(rng));
    return s;
}

ToyConfig small_toy(std::uint64_t seed) {
    ToyConfig c;
    c.seed = seed;
    c.vocab_size = 128;
    c.num_layers = 2;
    c.num_heads = 2;
    c.dim = 32;
    c.context = 64;
    return c;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// ---------------------------------------------------------------------------

Verdict telescoping() {
    const auto start = std::chrono::steady_clock::now();
    ToyTransformer toy(small_toy(101));
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 16);
    std::uniform_int_distribution<TokenId> tok(0, 127);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto prompt = random_prompt(rng, len(rng), 128);
        const TokenId t = tok(rng);
        TokenId a = tok(rng);
        while (a == t) a = tok(rng);
        const bool contrast = trial % 5 != 0;
        const auto spec = contrast ? ContrastiveSpec::pair(t, a) : ContrastiveSpec::target_only({t});

        const DistributionMatrix dist = toy.distributions(prompt);
        const auto& last = dist.back().probs;
        const double full = last[static_cast<std::size_t>(t)] - (contrast ? last[static_cast<std::size_t>(a)] : 0.0);

        const auto parts = tdd_bidirectional_parts(toy, prompt, spec);
        worst = std::max({worst, std::abs(sum(parts.forward.saliency) - parts.forward.r_trace.back()),
                          std::abs(sum(parts.backward.saliency) - parts.backward.r_trace.front()),
                          std::abs(parts.forward.r_trace.back() - full), std::abs(parts.backward.r_trace.front() - full),
                          std::abs(sum(parts.combined.saliency) - 2.0 * full)});
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {worst <= 1e-9 && secs < 30.0, fmt("500 cases, max deviation %.3g, %.2f s", worst, secs)};
}

Verdict causal_prefix() {
    ToyTransformer toy(ToyConfig{});
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> len(1, 12);
    std::size_t mismatches = 0, rows = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto prompt = random_prompt(rng, len(rng), toy.vocab_size());
        const auto full = toy.distributions(prompt);
        for (std::size_t i = 0; i < prompt.size(); ++i, ++rows) {
            if (toy.distributions(prompt.slice(0, i + 1)).back().probs != full[i].probs) ++mismatches;
        }
    }
    return {mismatches == 0, fmt("%.0f rows compared bitwise, %.0f mismatches", static_cast<double>(rows),
                                 static_cast<double>(mismatches))};
}

Verdict call_counts() {
    ToyTransformer toy(small_toy(5));
    CountingBackend counter(toy);
    std::mt19937_64 rng(31);
    bool ok = true;
    for (std::size_t n : {1u, 2u, 5u, 9u, 16u}) {
        const auto prompt = random_prompt(rng, n, 128);
        const auto spec = ContrastiveSpec::pair(3, 4);
        counter.reset();
        tdd_forward(counter, prompt, spec);
        ok = ok && counter.forward_calls() == 1;
        counter.reset();
        tdd_backward(counter, prompt, spec);
        ok = ok && counter.forward_calls() == n;
        counter.reset();
        tdd_bidirectional(counter, prompt, spec);
        ok = ok && counter.forward_calls() == n + 1;
        counter.reset();
        occlusion(counter, prompt, spec);
        ok = ok && counter.forward_calls() == n + 1;
    }
    return {ok, "forward 1, backward n, bidirectional n+1, occlusion n+1 for n in {1,2,5,9,16}"};
}

// Shared planted-trigger corpus.
struct PlantedWorld {
    ToyTransformer toy{PlantedFamily::toy_config(1)};
    PlantedTriggerBackend planted{toy, PlantedFamily::kTrigger, {PlantedFamily::kTarget}, PlantedFamily::kBias};
    ContrastiveSpec spec = ContrastiveSpec::pair(PlantedFamily::kTarget, PlantedFamily::kAlternative);
    std::vector<PlantedInstance> instances;

    explicit PlantedWorld(std::uint64_t seed, std::size_t min_len = 4, std::size_t max_len = 12) {
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 200; ++i) instances.push_back(make_planted_instance(rng, 64, min_len, max_len));
    }
};

Verdict planted_recovery() {
    PlantedWorld w(555);
    std::size_t hits_f = 0, hits_b = 0, hits_bi = 0, hits_occ = 0, hits_rand = 0;
    for (std::size_t i = 0; i < w.instances.size(); ++i) {
        const auto& inst = w.instances[i];
        const auto parts = tdd_bidirectional_parts(w.planted, inst.tokens, w.spec);
        hits_f += argmax_abs(parts.forward.saliency) == inst.trigger_position;
        hits_b += argmax_abs(parts.backward.saliency) == inst.trigger_position;
        hits_bi += argmax_abs(parts.combined.saliency) == inst.trigger_position;
        hits_occ += argmax_abs(occlusion(w.planted, inst.tokens, w.spec).saliency) == inst.trigger_position;
        hits_rand += argmax_abs(random_saliency(inst.tokens, sample_seed(9, i)).saliency) == inst.trigger_position;
    }
    const double n = 200.0;
    const bool ok = hits_f >= 190 && hits_b >= 190 && hits_bi >= 190 && hits_occ >= 190 && hits_rand <= 80;
    return {ok, fmt("fwd %.1f%% bwd %.1f%% bi %.1f%% occ %.1f%%", 100.0 * hits_f / n, 100.0 * hits_b / n,
                    100.0 * hits_bi / n, 100.0 * hits_occ / n) +
                    fmt(", random %.1f%%", 100.0 * hits_rand / n)};
}

Verdict metric_ordering() {
    PlantedWorld w(777);
    double aopc_bi = 0.0, aopc_rand = 0.0, suff_bi = 0.0, suff_rand = 0.0, spread = 0.0;
    for (std::size_t i = 0; i < w.instances.size(); ++i) {
        const auto& tokens = w.instances[i].tokens;
        const std::vector<SaliencyResult> all{
            tdd_forward(w.planted, tokens, w.spec),    tdd_backward(w.planted, tokens, w.spec),
            tdd_bidirectional(w.planted, tokens, w.spec), attention_rollout(w.planted, tokens),
            occlusion(w.planted, tokens, w.spec),       random_saliency(tokens, sample_seed(13, i))};
        std::vector<double> full_aopc, intact_suff;
        for (std::size_t m = 0; m < all.size(); ++m) {
            const auto a = aopc(w.planted, tokens, w.spec, all[m].saliency);
            const auto s = sufficiency(w.planted, tokens, w.spec, all[m].saliency);
            full_aopc.push_back(a.values.back());
            intact_suff.push_back(s.values.front());
            if (m == 2) {
                aopc_bi += a.average;
                suff_bi += s.average;
            }
            if (m == 5) {
                aopc_rand += a.average;
                suff_rand += s.average;
            }
        }
        for (std::size_t m = 1; m < all.size(); ++m) {
            spread = std::max({spread, std::abs(full_aopc[m] - full_aopc[0]), std::abs(intact_suff[m] - intact_suff[0])});
        }
    }
    const double n = static_cast<double>(w.instances.size());
    aopc_bi /= n, aopc_rand /= n, suff_bi /= n, suff_rand /= n;
    const bool ok = aopc_bi - aopc_rand >= 0.05 && suff_rand - suff_bi >= 0.05 && spread <= 1e-9;
    return {ok, fmt("AOPC bi %.4f vs random %.4f, Suff bi %.4f vs random %.4f", aopc_bi, aopc_rand, suff_bi, suff_rand) +
                    fmt(", endpoint spread %.3g", spread)};
}

Verdict exhaustive_oracle() {
    ToyTransformer toy(small_toy(8));
    PlantedTriggerBackend planted(toy, PlantedFamily::kTrigger, {PlantedFamily::kTarget}, 3.0);
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    std::uniform_int_distribution<int> coarse(-2, 2); // small range so ties happen
    std::size_t cases = 0, mismatches = 0, outside = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const Backend& backend = trial % 2 == 0 ? static_cast<const Backend&>(toy) : planted;
        const auto prompt = random_prompt(rng, len(rng), 128);
        const TokenId t = PlantedFamily::kTarget, a = PlantedFamily::kAlternative;
        const auto spec = ContrastiveSpec::pair(t, a);
        const auto table = subset_table(backend, prompt.ids, t, a, ToyTokenizer::kSpace);
        const auto bounds = aopc_order_bounds(table, prompt.size());

        std::vector<std::vector<double>> saliencies{tdd_bidirectional(backend, prompt, spec).saliency};
        std::vector<double> tied(prompt.size());
        for (double& v : tied) v = coarse(rng);
        saliencies.push_back(tied);

        for (const auto& sal : saliencies) {
            ++cases;
            const auto want = brute_force_metrics(table, sal);
            const auto got_a = aopc(backend, prompt, spec, sal);
            const auto got_s = sufficiency(backend, prompt, spec, sal);
            if (got_a.values != want.aopc || got_a.average != want.aopc_average || got_s.values != want.sufficiency ||
                got_s.average != want.sufficiency_average) {
                ++mismatches;
            }
            if (got_a.average > bounds.best + 1e-15 || got_a.average < bounds.worst - 1e-15) ++outside;
        }
    }
    return {mismatches == 0 && outside == 0, fmt("%.0f rankings on n<=6, %.0f mismatches, %.0f outside order bounds",
                                                 static_cast<double>(cases), static_cast<double>(mismatches),
                                                 static_cast<double>(outside))};
}

Verdict rollout() {
    AttentionStack a(1, 1, 2);
    a.at(0, 0, 0, 0) = 1.0;
    a.at(0, 0, 1, 0) = 0.5;
    a.at(0, 0, 1, 1) = 0.5;
    const auto r = rollout_from_attentions(a);
    const double example_err = std::max(std::abs(r[0] - 0.25), std::abs(r[1] - 0.75));

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(1, 14);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ToyConfig c = small_toy(1000 + static_cast<std::uint64_t>(trial));
        c.num_layers = 2 + static_cast<std::size_t>(trial % 3);
        c.num_heads = 1 + static_cast<std::size_t>(trial % 4);
        c.dim = 8 * c.num_heads;
        ToyTransformer toy(c);
        const auto stack = toy.attentions(random_prompt(rng, len(rng), 128));
        const std::size_t n = stack.positions();
        for (const auto& product : rollout_products(stack)) {
            for (std::size_t q = 0; q < n; ++q) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += product[q * n + k];
                worst = std::max(worst, std::abs(s - 1.0));
            }
        }
    }
    return {example_err <= 1e-12 && worst <= 1e-6,
            fmt("[[1,0],[.5,.5]] -> [%.15g, %.15g]; 100 stacks, max row-sum error %.3g", r[0], r[1], worst)};
}

Verdict steering_controls() {
    PlantedWorld w(999);
    std::size_t tdd_hits = 0, swapped_hits = 0, random_hits = 0;
    for (std::size_t i = 0; i < w.instances.size(); ++i) {
        const auto& inst = w.instances[i];
        auto found = [&](const SaliencyResult& s) {
            const auto pos = find_triggers(s, 0.15, 1);
            return std::find(pos.begin(), pos.end(), inst.trigger_position) != pos.end();
        };
        tdd_hits += found(tdd_bidirectional(w.planted, inst.tokens, w.spec));
        swapped_hits += found(tdd_bidirectional(w.planted, inst.tokens, w.spec.swapped()));
        random_hits += found(random_saliency(inst.tokens, sample_seed(21, i)));
    }
    const double n = 200.0;
    const double tdd_rate = 100.0 * tdd_hits / n, swapped_rate = 100.0 * swapped_hits / n,
                 random_rate = 100.0 * random_hits / n;

    // Ten-token prompts at fraction 0.15 must replace exactly two positions.
    WordList toxic;
    toxic.words = {"planted"};
    toxic.resolved_ids = {PlantedFamily::kTarget};
    std::mt19937_64 rng(5);
    bool exact_two = true;
    for (int k = 0; k < 10; ++k) {
        const auto inst = make_planted_instance(rng, 64, 10, 10);
        DetoxOptions opts;
        opts.max_new = 4;
        opts.sampling.seed = static_cast<std::uint64_t>(k);
        const auto out = suppress_toxicity(w.planted, inst.tokens, toxic, opts);
        std::size_t changed = 0;
        for (std::size_t p = 0; p < 10; ++p) changed += out.modified.ids[p] != inst.tokens.ids[p];
        exact_two = exact_two && out.replaced_positions.size() == 2 && changed == 2;
    }
    const bool ok = tdd_rate - swapped_rate >= 30.0 && tdd_rate - random_rate >= 30.0 && exact_two;
    return {ok, fmt("trigger recovery tdd %.1f%%, swapped %.1f%%, random %.1f%%", tdd_rate, swapped_rate, random_rate) +
                    (exact_two ? "; n=10 replaces 2" : "; n=10 did not replace exactly 2")};
}

Verdict distinct_ngrams() {
    std::mt19937_64 rng(61);
    std::vector<TokenSequence> corpus;
    std::vector<std::vector<TokenId>> raw;
    for (int i = 0; i < 50; ++i) {
        std::vector<TokenId> ids(std::uniform_int_distribution<std::size_t>(1, 30)(rng));
        for (auto& t : ids) t = std::uniform_int_distribution<TokenId>(0, 6)(rng);
        raw.push_back(ids);
        corpus.emplace_back(ids);
    }
    bool ok = true;
    for (std::size_t n = 1; n <= 3; ++n) {
        ok = ok && dist_n(corpus, static_cast<int>(n)) == oracle_dist_n(raw, n);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            ok = ok && dist_n(std::span<const TokenSequence>(&corpus[i], 1), static_cast<int>(n)) ==
                           oracle_dist_n({raw[i]}, n);
        }
    }
    const std::vector<TokenSequence> abab{TokenSequence({11, 12, 11, 12})};
    const double d1 = dist_n(abab, 1);
    return {ok && d1 == 0.5, fmt("50 sequences exact for n=1..3; \"a b a b\" Dist-1 = %.17g", d1)};
}

Verdict lens() {
    std::mt19937_64 rng(404);
    std::vector<TokenSequence> prompts;
    for (int i = 0; i < 10; ++i) prompts.push_back(random_prompt(rng, 1 + static_cast<std::size_t>(i), 512));
    ToyTransformer a(ToyConfig{}), b(ToyConfig{});
    bool non_negative = true, final_zero = true, reproducible = true;
    for (const auto& p : prompts) {
        const auto ka = kl_convergence(a, p);
        const auto kb = kl_convergence(b, p);
        for (double v : ka) non_negative = non_negative && v >= 0.0;
        final_zero = final_zero && ka.back() == 0.0;
        reproducible = reproducible && ka == kb && kl_convergence(a, p) == ka;
    }
    const auto pooled = kl_convergence(a, prompts);
    final_zero = final_zero && pooled.back() == 0.0;
    return {non_negative && final_zero && reproducible,
            std::string("non-negative ") + (non_negative ? "yes" : "no") + ", final exactly 0 " +
                (final_zero ? "yes" : "no") + ", bitwise reproducible " + (reproducible ? "yes" : "no")};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("env -u TDD_BACKEND_URL '") + TDD_CLI_PATH + "' " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "tdd_acceptance";
    fs::create_directories(dir);
    const auto ds = dir / "set.jsonl";
    {
        std::ofstream out(ds);
        out << R"({"prompt": "Joel complains about those", "target": "drivers", "alternative": "driver"})" << '\n'
            << R"({"prompt": "Amanda was respected by some", "target": "waitresses", "alternative": "picture"})" << '\n'
            << R"({"prompt": "Even many birds can", "target": "really", "alternative": "ever"})" << '\n';
    }
    const auto a = dir / "a.csv", b = dir / "b.csv";
    fs::remove(a);
    fs::remove(b);
    const std::string common = "eval --dataset '" + ds.string() + "' --seed 17 --out ";
    const int sa = run_cli(common + "'" + a.string() + "'");
    const int sb = run_cli(common + "'" + b.string() + "'");
    const std::string ca = slurp(a), cb = slurp(b);
    const bool ok = sa == 0 && sb == 0 && !ca.empty() && ca == cb;
    return {ok, fmt("two runs, exit %.0f/%.0f, %.0f bytes, identical: ", sa, sb, static_cast<double>(ca.size())) +
                    (ca == cb ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"telescoping", telescoping},
        {"causal-prefix", causal_prefix},
        {"call-counts", call_counts},
        {"planted-trigger", planted_recovery},
        {"metric-ordering", metric_ordering},
        {"exhaustive-oracle", exhaustive_oracle},
        {"rollout", rollout},
        {"steering-controls", steering_controls},
        {"dist-n", distinct_ngrams},
        {"lens", lens},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += !v.pass;
        std::printf("%s %2zu %-18s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
