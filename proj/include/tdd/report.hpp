#pragma once

#include "tdd/core.hpp"
#include "tdd/evalharness.hpp"

#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace tdd {

std::string html_escape(std::string_view text);

// Background colour for one saliency value, scaled by the largest magnitude
// in its vector: positive in red, negative in blue, deeper means larger.
std::string heat_color(double value, double max_abs);

// One <span> per token, coloured by saliency, with the value in the title.
std::string render_token_heatmap(const TokenSequence& tokens, std::span<const double> saliency);

// Standalone page for a single explanation.
void write_explanation_html(std::ostream& out, const TokenSequence& tokens, const SaliencyResult& result,
                            std::string_view title);

// CSV with columns dataset,method,metric,ratio,value,n_samples. One row per
// curve point plus a "mean" row per (dataset, method, metric). Values use
// %.17g so the file round-trips and is byte-stable across runs.
void write_report_csv(std::ostream& out, std::span<const EvalReport> reports);

// Summary tables plus one section per sample with a heatmap per method.
void write_report_html(std::ostream& out, std::span<const EvalReport> reports);

std::string format_double(double v);

} // namespace tdd
