#include "tdd/remote_backend.hpp"

#include "tdd/errors.hpp"

#include <httplib.h>
#include <json.hpp>

namespace tdd {

using nlohmann::json;

namespace {

json parse_body(const std::string& body, const std::string& path) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw TransportError("malformed JSON from " + path + ": " + e.what());
    }
}

template <typename Fn>
auto with_schema(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw TransportError("response from " + path + " does not match the protocol: " + e.what());
    }
}

std::vector<float> float_row(const json& row, std::size_t expected, const std::string& what) {
    if (!row.is_array() || row.size() != expected) {
        throw TransportError(what + " has " + std::to_string(row.is_array() ? row.size() : 0) +
                             " entries, expected " + std::to_string(expected));
    }
    std::vector<float> out;
    out.reserve(expected);
    for (const auto& x : row) out.push_back(x.get<float>());
    return out;
}

DistributionMatrix matrix_from_logits(const json& logits, std::size_t n, std::size_t vocab,
                                      const std::string& what) {
    if (!logits.is_array() || logits.size() != n) {
        throw TransportError(what + " row count does not match token count " + std::to_string(n));
    }
    DistributionMatrix out;
    out.rows.reserve(n);
    for (const auto& row : logits) {
        const auto values = float_row(row, vocab, what + " row");
        out.rows.push_back(DistributionRow::from_logits(std::span<const float>(values)));
    }
    return out;
}

json forward_body(const TokenSequence& tokens, bool attentions, bool layer_logits) {
    return json{{"tokens", tokens.ids},
                {"need", {{"logits", true}, {"attentions", attentions}, {"layer_logits", layer_logits}}}};
}

} // namespace

RemoteBackend::RemoteBackend(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    const auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("backend URL '" + base_url_ + "' must start with http:// or https://");
    }
    const auto path_start = base_url_.find('/', scheme_end + 3);
    scheme_host_port_ = base_url_.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : base_url_.substr(path_start);

    const std::string path = "/v1/info";
    const json info = parse_body(get(path), path);
    with_schema(path, [&] {
        descriptor_.vocab_size = info.at("vocab_size").get<std::size_t>();
        descriptor_.num_layers = info.at("num_layers").get<std::size_t>();
        descriptor_.num_heads = info.value("num_heads", std::size_t{0});
        descriptor_.model_name = info.value("model_name", std::string("remote"));
        descriptor_.context_length = info.value("context_length", std::size_t{0});
        return 0;
    });
    if (descriptor_.vocab_size == 0 || descriptor_.num_layers == 0) {
        throw TransportError("/v1/info advertised an empty vocabulary or zero layers");
    }
    descriptor_.capabilities = Capabilities{true, true, true, true};
    if (info.contains("capabilities")) {
        const json& caps = info["capabilities"];
        descriptor_.capabilities.attentions = caps.value("attentions", true);
        descriptor_.capabilities.layer_states = caps.value("layer_states", true);
        descriptor_.capabilities.generate = caps.value("generate", true);
    }
}

std::string RemoteBackend::get(const std::string& path) const {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    auto res = client.Get(path_prefix_ + path);
    if (!res) {
        throw TransportError("GET " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("GET " + base_url_ + path + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

std::string RemoteBackend::post(const std::string& path, const std::string& body) const {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    auto res = client.Post(path_prefix_ + path, body, "application/json");
    if (!res) {
        throw TransportError("POST " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 413) {
        throw CapacityError("POST " + base_url_ + path + " rejected the request as too large (HTTP 413)");
    }
    if (res->status == 400) {
        throw InvalidInputError("POST " + base_url_ + path + " rejected the request (HTTP 400): " + res->body);
    }
    if (res->status != 200) {
        throw TransportError("POST " + base_url_ + path + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

DistributionMatrix RemoteBackend::distributions(const TokenSequence& tokens) const {
    tokens.validate(descriptor_.vocab_size);
    const std::string path = "/v1/forward";
    const json res = parse_body(post(path, forward_body(tokens, false, false).dump()), path);
    return with_schema(path, [&] {
        return matrix_from_logits(res.at("logits"), tokens.size(), descriptor_.vocab_size, "logits");
    });
}

AttentionStack RemoteBackend::attentions(const TokenSequence& tokens) const {
    require_capability(descriptor_.capabilities.attentions, "attentions");
    tokens.validate(descriptor_.vocab_size);
    const std::string path = "/v1/forward";
    const json res = parse_body(post(path, forward_body(tokens, true, false).dump()), path);
    return with_schema(path, [&] {
        const json& att = res.at("attentions");
        const std::size_t n = tokens.size();
        const std::size_t layers = att.size();
        const std::size_t heads = layers > 0 ? att[0].size() : 0;
        if (layers != descriptor_.num_layers) {
            throw TransportError("attentions carry " + std::to_string(layers) + " layers, info advertised " +
                                 std::to_string(descriptor_.num_layers));
        }
        AttentionStack out(layers, heads, n);
        for (std::size_t l = 0; l < layers; ++l) {
            if (att[l].size() != heads) throw TransportError("ragged head dimension in attentions");
            for (std::size_t h = 0; h < heads; ++h) {
                const json& mat = att[l][h];
                if (mat.size() != n) throw TransportError("attention matrix row count mismatch");
                for (std::size_t q = 0; q < n; ++q) {
                    const auto row = float_row(mat[q], n, "attention row");
                    for (std::size_t k = 0; k < n; ++k) out.at(l, h, q, k) = row[k];
                }
            }
        }
        return out;
    });
}

LayerDistributionStack RemoteBackend::layer_distributions(const TokenSequence& tokens) const {
    require_capability(descriptor_.capabilities.layer_states, "layer_states");
    tokens.validate(descriptor_.vocab_size);
    const std::string path = "/v1/forward";
    const json res = parse_body(post(path, forward_body(tokens, false, true).dump()), path);
    return with_schema(path, [&] {
        const json& layers = res.at("layer_logits");
        if (!layers.is_array() || layers.size() != descriptor_.num_layers) {
            throw TransportError("layer_logits layer count does not match num_layers");
        }
        LayerDistributionStack out;
        for (const auto& layer : layers) {
            out.layers.push_back(matrix_from_logits(layer, tokens.size(), descriptor_.vocab_size, "layer_logits"));
        }
        return out;
    });
}

TokenSequence RemoteBackend::generate(const TokenSequence& tokens, int max_new,
                                      const SamplingParams& sampling) const {
    require_capability(descriptor_.capabilities.generate, "generate");
    if (max_new < 1) throw InvalidInputError("max_new must be at least 1");
    tokens.validate(descriptor_.vocab_size);
    const std::string path = "/v1/generate";
    const json body{{"tokens", tokens.ids},
                    {"max_new_tokens", max_new},
                    {"temperature", sampling.temperature},
                    {"top_p", sampling.top_p},
                    {"seed", sampling.seed}};
    const json res = parse_body(post(path, body.dump()), path);
    return with_schema(path, [&] {
        TokenSequence out(res.at("tokens").get<std::vector<TokenId>>());
        if (out.size() != static_cast<std::size_t>(max_new)) {
            throw TransportError("generate returned " + std::to_string(out.size()) + " tokens, expected " +
                                 std::to_string(max_new));
        }
        if (res.contains("texts")) {
            auto texts = res["texts"].get<std::vector<std::string>>();
            if (texts.size() == out.size()) out.texts = std::move(texts);
        }
        return out;
    });
}

Tokenization RemoteBackend::tokenize(std::string_view text) const {
    const std::string path = "/v1/tokenize";
    const json body{{"text", std::string(text)}};
    const json res = parse_body(post(path, body.dump()), path);
    return with_schema(path, [&] {
        Tokenization out;
        out.ids = res.at("tokens").get<std::vector<TokenId>>();
        if (res.contains("texts")) out.texts = res["texts"].get<std::vector<std::string>>();
        if (out.texts.size() != out.ids.size()) {
            out.texts.clear();
            for (TokenId id : out.ids) out.texts.push_back("<" + std::to_string(id) + ">");
        }
        return out;
    });
}

TokenId RemoteBackend::space_token() const {
    std::call_once(space_once_, [this] { space_token_ = Backend::space_token(); });
    return space_token_;
}

} // namespace tdd
