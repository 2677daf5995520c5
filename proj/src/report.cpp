#include "tdd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tdd {

namespace {

const char* kStyle = R"(<style>
body { font-family: sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; margin-bottom: 1.5em; }
th, td { border: 1px solid #bbb; padding: 4px 8px; text-align: right; }
th { background: #eee; }
.tokens { font-family: monospace; line-height: 2.2em; }
.tok { padding: 2px 3px; margin: 0 1px; border-radius: 3px; white-space: pre; }
.method { display: inline-block; width: 7em; color: #555; }
section { border-top: 1px solid #ddd; padding-top: 0.5em; }
</style>
)";

double max_magnitude(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string html_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string heat_color(double value, double max_abs) {
    const double strength = max_abs > 0.0 ? std::min(1.0, std::abs(value) / max_abs) : 0.0;
    if (value >= 0.0) return "rgba(220,38,38," + fixed(strength, 3) + ")";
    return "rgba(37,99,235," + fixed(strength, 3) + ")";
}

std::string render_token_heatmap(const TokenSequence& tokens, std::span<const double> saliency) {
    const double scale = max_magnitude(saliency);
    std::string out = "<span class=\"tokens\">";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double s = i < saliency.size() ? saliency[i] : 0.0;
        out += "<span class=\"tok\" style=\"background:" + heat_color(s, scale) + "\" title=\"" +
               html_escape(format_double(s)) + "\">" + html_escape(tokens.text_at(i)) + "</span>";
    }
    out += "</span>";
    return out;
}

void write_explanation_html(std::ostream& out, const TokenSequence& tokens, const SaliencyResult& result,
                            std::string_view title) {
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << html_escape(title) << "</title>\n"
        << kStyle << "</head><body>\n";
    out << "<h1>" << html_escape(title) << "</h1>\n";
    out << "<p>variant: " << to_string(result.variant) << "</p>\n";
    out << "<p>" << render_token_heatmap(tokens, result.saliency) << "</p>\n";
    out << "<table><tr><th>position</th><th>token</th><th>saliency</th></tr>\n";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out << "<tr><td>" << i << "</td><td>" << html_escape(tokens.text_at(i)) << "</td><td>"
            << fixed(result.saliency[i], 6) << "</td></tr>\n";
    }
    out << "</table>\n</body></html>\n";
}

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
    out << "dataset,method,metric,ratio,value,n_samples\n";
    for (const auto& r : reports) {
        for (const auto& m : r.methods) {
            const auto name = method_name(m.method);
            auto emit = [&](const char* metric, const std::vector<double>& ratios, const std::vector<double>& curve,
                            double average) {
                for (std::size_t k = 0; k < curve.size(); ++k) {
                    out << r.dataset << ',' << name << ',' << metric << ',' << format_double(ratios[k]) << ','
                        << format_double(curve[k]) << ',' << r.n_samples << '\n';
                }
                out << r.dataset << ',' << name << ',' << metric << ",mean," << format_double(average) << ','
                    << r.n_samples << '\n';
            };
            emit("aopc", r.aopc_ratios, m.aopc_curve, m.aopc_average);
            emit("sufficiency", r.sufficiency_ratios, m.sufficiency_curve, m.sufficiency_average);
        }
    }
}

void write_report_html(std::ostream& out, std::span<const EvalReport> reports) {
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Saliency evaluation</title>\n"
        << kStyle << "</head><body>\n<h1>Saliency evaluation</h1>\n";
    for (const auto& r : reports) {
        out << "<h2>" << html_escape(r.dataset) << "</h2>\n";
        out << "<p>" << r.n_samples << " samples evaluated, " << r.skipped << " skipped";
        if (r.split_words > 0) out << ", " << r.split_words << " with split target/alternative words";
        out << "</p>\n";
        out << "<table><tr><th>method</th><th>AOPC (higher is better)</th><th>Sufficiency (lower is better)</th></tr>\n";
        for (const auto& m : r.methods) {
            out << "<tr><td>" << method_name(m.method) << "</td><td>" << fixed(100.0 * m.aopc_average, 2)
                << "</td><td>" << fixed(100.0 * m.sufficiency_average, 2) << "</td></tr>\n";
        }
        out << "</table>\n";
        for (const auto& s : r.samples) {
            out << "<section><h3>sample " << s.index << "</h3>\n";
            for (std::size_t mi = 0; mi < s.saliency.size() && mi < r.methods.size(); ++mi) {
                out << "<div><span class=\"method\">" << method_name(r.methods[mi].method) << "</span>"
                    << render_token_heatmap(s.tokens, s.saliency[mi].saliency) << "</div>\n";
            }
            out << "</section>\n";
        }
    }
    out << "</body></html>\n";
}

} // namespace tdd
