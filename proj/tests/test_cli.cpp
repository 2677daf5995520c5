#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run tdd_cli(const std::string& args) {
    const std::string cmd = std::string("env -u TDD_BACKEND_URL '") + TDD_CLI_PATH + "' " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string data(const char* name) { return std::string("'") + TDD_DATA_DIR + "/" + name + "'"; }

fs::path scratch(const char* name) {
    const auto dir = fs::temp_directory_path() / "tdd_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("explain") {
    const auto r = tdd_cli("explain --prompt 'Joel complains about those' --target drivers --alt driver --format json");
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.size() == 4);
    CHECK(j[0]["token"] == "Joel");
    CHECK(j[3]["id"].is_number_integer());
    CHECK(j[3]["saliency"].is_number());

    const auto target_only = tdd_cli("explain --prompt 'Joel complains about those' --target drivers --format json");
    CHECK(target_only.status == 0);
    CHECK(nlohmann::json::parse(target_only.out).size() == 4);

    const auto text = tdd_cli("explain --prompt 'Joel complains about those' --target drivers --alt driver");
    CHECK(text.status == 0);
    CHECK(text.out.rfind("variant: bidirectional", 0) == 0);

    const auto html_path = scratch("explain.html");
    const auto html = tdd_cli("explain --prompt 'Joel complains about those' --target drivers --alt driver "
                              "--variant forward --format html --out '" + html_path.string() + "'");
    CHECK(html.status == 0);
    const auto page = slurp(html_path);
    CHECK(page.find("variant: forward") != std::string::npos);
    std::size_t spans = 0;
    for (auto p = page.find("class=\"tok\""); p != std::string::npos; p = page.find("class=\"tok\"", p + 1)) ++spans;
    CHECK(spans == 4);
}

TEST_CASE("exit codes") {
    CHECK(tdd_cli("explain --prompt 'those' --target zzzqx").status == 2);
    CHECK(tdd_cli("explain --prompt 'those' --target drivers --alt drivers").status == 2);
    CHECK(tdd_cli("explain --prompt 'those'").status == 2);
    CHECK(tdd_cli("explain --prompt 'those' --target drivers --format xml").status == 2);
    CHECK(tdd_cli("explain --prompt 'those' --target drivers --backend http://127.0.0.1:1").status == 2);
    CHECK(tdd_cli("eval --dataset /nonexistent.jsonl --out /tmp/x.csv").status == 2);
    CHECK(tdd_cli("eval --dataset " + data("demo.jsonl") + " --methods bogus --out /tmp/x.csv").status == 2);
    CHECK(tdd_cli("detox --prompt 'you fool' --wordlist " + data("toxic.txt") + " --fraction 2").status == 2);
    CHECK(tdd_cli("lens --prompt 'a b c' --toy-vocab 4").status == 2);
    CHECK(tdd_cli("nonsense").status == 2);
}

TEST_CASE("a backend that fails mid-run exits with 1") {
    httplib::Server server;
    server.Get("/v1/info", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vocab_size": 16, "num_layers": 2, "num_heads": 1, "model_name": "flaky"})",
                        "application/json");
    });
    // one token per request, its id taken from the last character
    server.Post("/v1/tokenize", [](const httplib::Request& req, httplib::Response& res) {
        const std::string text = nlohmann::json::parse(req.body)["text"];
        const int id = 2 + text.back() % 10;
        res.set_content(nlohmann::json{{"tokens", {id}}, {"texts", {text}}}.dump(), "application/json");
    });
    server.Post("/v1/forward", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const auto r = tdd_cli("explain --prompt x --target a --alt b --backend http://127.0.0.1:" + std::to_string(port));
    server.stop();
    t.join();
    CHECK(r.status == 1);
}

TEST_CASE("eval writes byte-stable reports") {
    const auto a = scratch("eval_a.csv"), b = scratch("eval_b.csv"), h = scratch("eval.html");
    const std::string common = "eval --dataset " + data("demo.jsonl") + " --dataset " + data("demo.jsonl") + " --seed 3";
    REQUIRE(tdd_cli(common + " --out '" + a.string() + "' --html '" + h.string() + "'").status == 0);
    REQUIRE(tdd_cli(common + " --jobs 2 --out '" + b.string() + "'").status == 0);
    const auto csv = slurp(a);
    CHECK(csv == slurp(b));
    CHECK(csv.rfind("dataset,method,metric,ratio,value,n_samples\n", 0) == 0);
    CHECK(csv.find("all:dataset-mean,tdd-bi,aopc,mean,") != std::string::npos);
    CHECK(csv.find("all:sample-mean,random,sufficiency,0,") != std::string::npos);
    CHECK(slurp(h).find("<h2>demo</h2>") != std::string::npos);
}

TEST_CASE("detox, steer and lens") {
    const auto d = tdd_cli("detox --prompt 'you are a stupid fool and i hate this damn day' --wordlist " +
                           data("toxic.txt") + " --max-new 6 --seed 1");
    REQUIRE(d.status == 0);
    const auto dj = nlohmann::json::parse(d.out);
    CHECK(dj["original"]["ids"].size() == 11);
    CHECK(dj["replaced_positions"].size() == 2);
    CHECK(dj["continuation"]["ids"].size() == 6);

    const auto s = tdd_cli("steer --prompt 'the movie was boring and terrible' --direction positive --pos-words " +
                           data("positive.txt") + " --neg-words " + data("negative.txt") + " --max-new 4");
    REQUIRE(s.status == 0);
    const auto sj = nlohmann::json::parse(s.out);
    REQUIRE(sj["replaced_positions"].size() == 1);
    const std::size_t p = sj["replaced_positions"][0];
    CHECK(sj["modified"]["texts"][p] == "positive");

    const auto trace = scratch("trace.json");
    const auto l = tdd_cli("lens --prompt 'those drivers' --prompt 'many birds can' --trace '" + trace.string() + "'");
    REQUIRE(l.status == 0);
    CHECK(l.out.rfind("layer,mean_kl\n", 0) == 0);
    CHECK(l.out.find("\n4,0\n") != std::string::npos);
    CHECK(nlohmann::json::parse(slurp(trace)).size() == 4);
}
