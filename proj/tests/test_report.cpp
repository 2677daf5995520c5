#include <doctest.h>

#include "tdd/report.hpp"

#include <sstream>

using namespace tdd;

TEST_CASE("html escaping") {
    CHECK(html_escape("<a href=\"x\">&'</a>") == "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
    CHECK(html_escape("plain") == "plain");
}

TEST_CASE("heat colours follow sign and magnitude") {
    CHECK(heat_color(0.5, 1.0) == "rgba(220,38,38,0.500)");
    CHECK(heat_color(-1.0, 1.0) == "rgba(37,99,235,1.000)");
    CHECK(heat_color(0.0, 0.0) == "rgba(220,38,38,0.000)");
}

TEST_CASE("token heatmap has one span per token") {
    const TokenSequence t({1, 2, 3}, {"a", "<b>", "c"});
    const auto html = render_token_heatmap(t, std::vector<double>{0.1, -0.2, 0.0});
    std::size_t spans = 0;
    for (auto pos = html.find("class=\"tok\""); pos != std::string::npos; pos = html.find("class=\"tok\"", pos + 1)) {
        ++spans;
    }
    CHECK(spans == 3);
    CHECK(html.find("&lt;b&gt;") != std::string::npos);
    CHECK(html.find("rgba(37,99,235,1.000)") != std::string::npos);
}

TEST_CASE("report csv layout") {
    EvalReport r;
    r.dataset = "demo";
    r.n_samples = 2;
    r.aopc_ratios = {0.5, 1.0};
    r.sufficiency_ratios = {0.0, 0.5, 1.0};
    MethodSummary m;
    m.method = Method::tdd_bidirectional;
    m.aopc_curve = {0.25, 0.75};
    m.aopc_average = 0.5;
    m.sufficiency_curve = {0.6, 0.4, 0.2};
    m.sufficiency_average = 0.4;
    r.methods.push_back(m);

    std::ostringstream out;
    write_report_csv(out, std::span<const EvalReport>(&r, 1));
    CHECK(out.str() ==
          "dataset,method,metric,ratio,value,n_samples\n"
          "demo,tdd-bi,aopc,0.5,0.25,2\n"
          "demo,tdd-bi,aopc,1,0.75,2\n"
          "demo,tdd-bi,aopc,mean,0.5,2\n"
          "demo,tdd-bi,sufficiency,0,0.59999999999999998,2\n"
          "demo,tdd-bi,sufficiency,0.5,0.40000000000000002,2\n"
          "demo,tdd-bi,sufficiency,1,0.20000000000000001,2\n"
          "demo,tdd-bi,sufficiency,mean,0.40000000000000002,2\n");

    std::ostringstream html;
    write_report_html(html, std::span<const EvalReport>(&r, 1));
    CHECK(html.str().find("<td>tdd-bi</td><td>50.00</td><td>40.00</td>") != std::string::npos);
}
