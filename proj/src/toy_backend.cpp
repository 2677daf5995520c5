#include "tdd/toy_backend.hpp"

#include "tdd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace tdd {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kLayerNormEps = 1e-5;

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_punct_piece(char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

// Box-Muller over mt19937_64 so weights do not depend on the standard
// library's normal_distribution.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    void fill_gaussian(GaussianSource& g, double std_dev) {
        for (double& x : data) x = g.next() * std_dev;
    }
};

// out[j] = bias[j] + sum_i in[i] * w[i][j], accumulated in i order.
void affine(const double* in, const Matrix& w, const std::vector<double>& bias, double* out) {
    for (std::size_t j = 0; j < w.cols; ++j) out[j] = bias[j];
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double x = in[i];
        const double* wr = w.row(i);
        for (std::size_t j = 0; j < w.cols; ++j) out[j] += x * wr[j];
    }
}

void layer_norm(const double* in, const std::vector<double>& gain, const std::vector<double>& bias,
                std::size_t dim, double* out) {
    double mean = 0.0;
    for (std::size_t i = 0; i < dim; ++i) mean += in[i];
    mean /= static_cast<double>(dim);
    double var = 0.0;
    for (std::size_t i = 0; i < dim; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<double>(dim);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < dim; ++i) out[i] = (in[i] - mean) * inv * gain[i] + bias[i];
}

double gelu(double x) {
    constexpr double k = 0.7978845608028654; // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

} // namespace

ToyTokenizer::ToyTokenizer(std::size_t vocab_size) {
    pieces_.reserve(vocab_size);
    pieces_.emplace_back(" ");
    pieces_.emplace_back("<unk>");
    for (const std::string& w : toy_word_list()) {
        if (pieces_.size() >= vocab_size) break;
        if (lookup_.count(w)) continue;
        lookup_.emplace(w, static_cast<TokenId>(pieces_.size()));
        pieces_.push_back(w);
    }
    while (pieces_.size() < vocab_size) {
        std::string synthetic = "w" + std::to_string(pieces_.size());
        lookup_.emplace(synthetic, static_cast<TokenId>(pieces_.size()));
        pieces_.push_back(std::move(synthetic));
    }
}

Tokenization ToyTokenizer::tokenize(std::string_view text) const {
    Tokenization out;
    auto emit = [&](std::string_view piece) {
        auto it = lookup_.find(lowercase(piece));
        out.ids.push_back(it == lookup_.end() ? kUnknown : it->second);
        out.texts.emplace_back(piece);
    };

    std::size_t i = 0;
    bool saw_word = false;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_punct_piece(c)) {
            emit(text.substr(i, 1));
            saw_word = true;
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               !is_punct_piece(text[j])) {
            ++j;
        }
        emit(text.substr(i, j - i));
        saw_word = true;
        i = j;
    }
    if (!saw_word && !text.empty()) {
        out.ids.push_back(kSpace);
        out.texts.emplace_back(" ");
    }
    return out;
}

struct ToyTransformer::Weights {
    struct Block {
        std::vector<double> ln1_gain, ln1_bias;
        Matrix qkv;
        std::vector<double> qkv_bias;
        Matrix attn_out;
        std::vector<double> attn_out_bias;
        std::vector<double> ln2_gain, ln2_bias;
        Matrix fc;
        std::vector<double> fc_bias;
        Matrix proj;
        std::vector<double> proj_bias;
    };

    Matrix token_embedding;    // [V][d], also the LM head
    Matrix position_embedding; // [context][d]
    std::vector<Block> blocks;
    std::vector<double> final_gain, final_bias;
};

struct ToyTransformer::Trace {
    bool want_attentions = false;
    bool want_layers = false;
    std::vector<std::vector<double>> final_logits;                     // [n][V]
    AttentionStack attention;                                          // when requested
    std::vector<std::vector<std::vector<double>>> layer_logits;         // [L][n][V]
};

ToyTransformer::ToyTransformer(const ToyConfig& config)
    : config_(config), tokenizer_(std::max<std::size_t>(config.vocab_size, 2)) {
    if (config.vocab_size < 8) throw ConfigError("toy vocabulary must have at least 8 tokens");
    if (config.num_layers < 2) throw ConfigError("toy model needs at least 2 layers");
    if (config.num_heads == 0) throw ConfigError("toy model needs at least one attention head");
    if (config.dim == 0 || config.dim % config.num_heads != 0) {
        throw ConfigError("toy model dim " + std::to_string(config.dim) +
                          " is not divisible by head count " + std::to_string(config.num_heads));
    }
    if (config.context == 0) throw ConfigError("toy model context must be positive");

    descriptor_.vocab_size = config.vocab_size;
    descriptor_.num_layers = config.num_layers;
    descriptor_.num_heads = config.num_heads;
    descriptor_.context_length = config.context;
    descriptor_.model_name = "toy-transformer(seed=" + std::to_string(config.seed) + ")";
    descriptor_.capabilities = Capabilities{true, true, true, true};

    const std::size_t d = config.dim;
    GaussianSource g(config.seed);
    weights_ = std::make_unique<Weights>();
    Weights& w = *weights_;
    w.token_embedding = Matrix(config.vocab_size, d);
    w.token_embedding.fill_gaussian(g, kInitStd);
    w.position_embedding = Matrix(config.context, d);
    w.position_embedding.fill_gaussian(g, kInitStd);
    w.blocks.resize(config.num_layers);
    for (auto& b : w.blocks) {
        b.ln1_gain.assign(d, 1.0);
        b.ln1_bias.assign(d, 0.0);
        b.qkv = Matrix(d, 3 * d);
        b.qkv.fill_gaussian(g, kInitStd);
        b.qkv_bias.assign(3 * d, 0.0);
        b.attn_out = Matrix(d, d);
        b.attn_out.fill_gaussian(g, kInitStd);
        b.attn_out_bias.assign(d, 0.0);
        b.ln2_gain.assign(d, 1.0);
        b.ln2_bias.assign(d, 0.0);
        b.fc = Matrix(d, 4 * d);
        b.fc.fill_gaussian(g, kInitStd);
        b.fc_bias.assign(4 * d, 0.0);
        b.proj = Matrix(4 * d, d);
        b.proj.fill_gaussian(g, kInitStd);
        b.proj_bias.assign(d, 0.0);
    }
    w.final_gain.assign(d, 1.0);
    w.final_bias.assign(d, 0.0);
}

ToyTransformer::~ToyTransformer() = default;

void ToyTransformer::forward(const TokenSequence& tokens, Trace& trace) const {
    tokens.validate(config_.vocab_size);
    const std::size_t n = tokens.size();
    if (n > config_.context) {
        throw CapacityError("prompt of " + std::to_string(n) + " tokens exceeds toy context " +
                            std::to_string(config_.context));
    }
    const Weights& w = *weights_;
    const std::size_t d = config_.dim;
    const std::size_t heads = config_.num_heads;
    const std::size_t head_dim = d / heads;
    const std::size_t vocab = config_.vocab_size;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Matrix hidden(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* te = w.token_embedding.row(static_cast<std::size_t>(tokens.ids[i]));
        const double* pe = w.position_embedding.row(i);
        double* h = hidden.row(i);
        for (std::size_t k = 0; k < d; ++k) h[k] = te[k] + pe[k];
    }

    if (trace.want_attentions) trace.attention = AttentionStack(config_.num_layers, heads, n);
    if (trace.want_layers) trace.layer_logits.assign(config_.num_layers, {});

    std::vector<double> normed(d);
    std::vector<double> mixed(d);
    std::vector<double> projected(d);
    std::vector<double> fc_out(4 * d);
    std::vector<double> scores(n);
    Matrix qkv(n, 3 * d);

    auto lm_head = [&](const Matrix& h, std::vector<std::vector<double>>& out) {
        out.assign(n, std::vector<double>(vocab, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            layer_norm(h.row(i), w.final_gain, w.final_bias, d, normed.data());
            for (std::size_t v = 0; v < vocab; ++v) {
                const double* e = w.token_embedding.row(v);
                double acc = 0.0;
                for (std::size_t k = 0; k < d; ++k) acc += normed[k] * e[k];
                out[i][v] = acc;
            }
        }
    };

    for (std::size_t l = 0; l < config_.num_layers; ++l) {
        const auto& b = w.blocks[l];

        for (std::size_t i = 0; i < n; ++i) {
            layer_norm(hidden.row(i), b.ln1_gain, b.ln1_bias, d, normed.data());
            affine(normed.data(), b.qkv, b.qkv_bias, qkv.row(i));
        }

        for (std::size_t i = 0; i < n; ++i) {
            std::fill(mixed.begin(), mixed.end(), 0.0);
            for (std::size_t h = 0; h < heads; ++h) {
                const double* q = qkv.row(i) + h * head_dim;
                double max_score = -INFINITY;
                for (std::size_t j = 0; j <= i; ++j) {
                    const double* k = qkv.row(j) + d + h * head_dim;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < head_dim; ++c) dot += q[c] * k[c];
                    scores[j] = dot * scale;
                    max_score = std::max(max_score, scores[j]);
                }
                double sum = 0.0;
                for (std::size_t j = 0; j <= i; ++j) {
                    scores[j] = std::exp(scores[j] - max_score);
                    sum += scores[j];
                }
                for (std::size_t j = 0; j <= i; ++j) {
                    const double a = scores[j] / sum;
                    if (trace.want_attentions) trace.attention.at(l, h, i, j) = a;
                    const double* v = qkv.row(j) + 2 * d + h * head_dim;
                    double* out = mixed.data() + h * head_dim;
                    for (std::size_t c = 0; c < head_dim; ++c) out[c] += a * v[c];
                }
            }
            affine(mixed.data(), b.attn_out, b.attn_out_bias, projected.data());
            double* hr = hidden.row(i);
            for (std::size_t k = 0; k < d; ++k) hr[k] += projected[k];

            layer_norm(hr, b.ln2_gain, b.ln2_bias, d, normed.data());
            affine(normed.data(), b.fc, b.fc_bias, fc_out.data());
            for (double& x : fc_out) x = gelu(x);
            affine(fc_out.data(), b.proj, b.proj_bias, projected.data());
            for (std::size_t k = 0; k < d; ++k) hr[k] += projected[k];
        }

        if (trace.want_layers) lm_head(hidden, trace.layer_logits[l]);
    }

    if (trace.want_layers) {
        trace.final_logits = trace.layer_logits.back();
    } else {
        lm_head(hidden, trace.final_logits);
    }
}

std::vector<std::vector<double>> ToyTransformer::logits(const TokenSequence& tokens) const {
    Trace trace;
    forward(tokens, trace);
    return std::move(trace.final_logits);
}

std::vector<std::vector<std::vector<double>>> ToyTransformer::layer_logits(const TokenSequence& tokens) const {
    Trace trace;
    trace.want_layers = true;
    forward(tokens, trace);
    return std::move(trace.layer_logits);
}

DistributionMatrix ToyTransformer::distributions(const TokenSequence& tokens) const {
    const auto raw = logits(tokens);
    DistributionMatrix out;
    out.rows.reserve(raw.size());
    for (const auto& row : raw) out.rows.push_back(DistributionRow::from_logits(std::span<const double>(row)));
    return out;
}

AttentionStack ToyTransformer::attentions(const TokenSequence& tokens) const {
    Trace trace;
    trace.want_attentions = true;
    forward(tokens, trace);
    return std::move(trace.attention);
}

LayerDistributionStack ToyTransformer::layer_distributions(const TokenSequence& tokens) const {
    const auto raw = layer_logits(tokens);
    LayerDistributionStack out;
    out.layers.resize(raw.size());
    for (std::size_t l = 0; l < raw.size(); ++l) {
        for (const auto& row : raw[l]) {
            out.layers[l].rows.push_back(DistributionRow::from_logits(std::span<const double>(row)));
        }
    }
    return out;
}

Tokenization ToyTransformer::tokenize(std::string_view text) const { return tokenizer_.tokenize(text); }

std::optional<std::string> ToyTransformer::decode(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokenizer_.size()) return std::nullopt;
    return tokenizer_.piece(id);
}

std::unique_ptr<ToyTransformer> make_toy_backend(const ToyConfig& config) {
    return std::make_unique<ToyTransformer>(config);
}

} // namespace tdd
