#include "doctest.h"

#include "cli.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args, std::optional<std::uint64_t> env_seed = std::nullopt) {
    std::ostringstream out, err;
    const int code = qlab::cli::run(args, out, err, env_seed);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string temp_path(const std::string& name) { return "qlab_cli_test_" + name; }

}  // namespace

TEST_CASE("sets") {
    auto r = run({"sets", "--expr", "(0,1)|[2,3)", "--measure"});
    CHECK(r.code == 0);
    CHECK(r.out == "2\n");
    CHECK(run({"sets", "--expr", "[0,1]|(1,2)"}).out == "[0,2)\n");
    CHECK(run({"sets", "--expr", "(0,1)|{5}", "--quotient"}).out == "pi((0,1))\n");
    CHECK(run({"sets", "--expr", "(0,1)", "--contains", "1/2", "--contains", "1"}).out == "1/2 in set\n1 not in set\n");
    auto j = nlohmann::json::parse(run({"sets", "--expr", "(-inf,0)", "--format", "json"}).out);
    CHECK(j["measure"] == "inf");
}

TEST_CASE("exit codes") {
    auto bad_expr = run({"sets", "--expr", "(0,1"});
    CHECK(bad_expr.code == 2);
    CHECK(bad_expr.err.find("expr     :=") != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"sets"}).code == 2);
    CHECK(run({"sets", "--expr", "(0,1)", "--nope"}).code == 2);
    CHECK(run({"verify", "--suite", "nope"}).code == 2);
    CHECK(run({"smear", "--set", "(0,1)", "--step", "0"}).code == 2);
    // domain errors
    auto overlap = run({"state", "--state", "point:0", "--effect", "smear((0,1); box(1)) + smear((1/2,2); box(1))"});
    CHECK(overlap.code == 1);
    CHECK(overlap.err.find("not orthogonal") != std::string::npos);
    CHECK(run({"state", "--state", "sharp:/nonexistent/base.json", "--effect", "const(1)"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("verify") {
    auto r = run({"verify", "--suite", "boolean", "--cases", "1000"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("PASS [1] boolean-laws: 1000 triples", 0) == 0);
}

TEST_CASE("construct report matches the closed form") {
    auto r = run({"construct", "--lambda", "0", "--m", "3", "--depth", "16", "--format", "json"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["ok"] == true);
    REQUIRE(j["families"].size() == 3);
    // components (2^-n (1 + 2^-(m+1)), 2^-n (1 + 2^-m)) at lambda = 0, as reduced fractions
    for (int m = 1; m <= 3; ++m) {
        const auto& comps = j["families"][m - 1]["components"];
        REQUIRE(comps.size() == 64);
        for (int n : {1, 2, 10}) {
            const long den_lo = (1L << (n + m + 1)), num_lo = (1L << (m + 1)) + 1;
            const long den_hi = (1L << (n + m)), num_hi = (1L << m) + 1;
            CHECK(comps[n - 1]["lo"] == std::to_string(num_lo) + "/" + std::to_string(den_lo));
            CHECK(comps[n - 1]["hi"] == std::to_string(num_hi) + "/" + std::to_string(den_hi));
        }
    }
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) CHECK(j["disjoint"][i][k] == (i != k));
    for (const auto& c : j["fmp"]) {
        CHECK(c["holds"] == true);
        for (const auto& meet : c["meets"]) CHECK(meet["witness"].is_object());
    }
    auto shifted = nlohmann::json::parse(run({"construct", "--lambda", "1/3", "--m", "1", "--depth", "4"}).out);
    CHECK(shifted["families"][0]["components"][0]["lo"] == "23/24");
    CHECK(run({"construct", "--m", "2", "--depth", "4", "--format", "text"}).out.find("all checks passed") != std::string::npos);
}

TEST_CASE("smear tabulation") {
    auto r = run({"smear", "--set", "(0,1)", "--density", "triangle", "--param", "1/2", "--from", "-1", "--to", "2", "--step",
                  "1/8"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "q,value");
    int rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const std::string qs = line.substr(0, comma);
        const double q = qs.find('/') == std::string::npos
                             ? std::stod(qs)
                             : std::stod(qs.substr(0, qs.find('/'))) / std::stod(qs.substr(qs.find('/') + 1));
        const double v = std::stod(line.substr(comma + 1));
        // triangle of half-width h: the mass of (-inf, x] is 1/2 + x/h - x|x|/(2 h^2) on [-h, h]
        auto F = [](double x) {
            const double h = 0.5;
            if (x <= -h) return 0.0;
            if (x >= h) return 1.0;
            return 0.5 + x / h - x * std::abs(x) / (2 * h * h);
        };
        CHECK(v == doctest::Approx(F(q) - F(q - 1)).epsilon(1e-14));
        ++rows;
    }
    CHECK(rows == 25);
}

TEST_CASE("state") {
    auto p = nlohmann::json::parse(run({"state", "--state", "point:0", "--effect", "smear((0,inf); box(1))"}).out);
    CHECK(p["value"] == 0.5);
    auto esc = nlohmann::json::parse(run({"state", "--state", "escaping", "--effect", "~smear((0,1); gaussian(1))"}).out);
    CHECK(esc["value"] == 1.0);

    const auto base = temp_path("base.json");
    std::ofstream(base) << R"J({"lambda": "0", "adjoin": ["(0,inf)"]})J";
    auto sharp = nlohmann::json::parse(run({"state", "--state", "sharp:" + base, "--effect", "smear((-1,1); box(1/2))"}).out);
    CHECK(sharp["value"] == doctest::Approx(1.0).epsilon(1e-9));
    auto shallow =
        nlohmann::json::parse(run({"state", "--state", "sharp:" + base, "--depth", "3", "--effect", "smear((-1,1); gaussian(1))"}).out);
    CHECK(shallow["value"] == "undetermined");
    std::ofstream(base) << R"J({"classes": ["(1,inf)", "(2,inf)", "(3,inf)"], "depth": 3})J";
    auto esc_base = nlohmann::json::parse(run({"state", "--state", "sharp:" + base, "--effect", "const(1/4)"}).out);
    CHECK(esc_base["value"] == doctest::Approx(0.25).epsilon(1e-12));
    std::remove(base.c_str());
}

TEST_CASE("simulate: determinism, config and seed precedence") {
    const auto out1 = temp_path("a.csv"), out2 = temp_path("b.csv"), cfg = temp_path("cfg");
    const std::vector<std::string> args{"simulate", "--density", "mixture(1/2: uniform(0,1), 1/2: gaussian(2,1/2))",
                                        "--level", "3", "--n", "5000"};
    auto with_out = [&](const std::string& path, std::vector<std::string> extra = {}) {
        auto a = args;
        a.push_back("--out");
        a.push_back(path);
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    auto r1 = run(with_out(out1));
    auto r2 = run(with_out(out2, {"--threads", "3"}));
    REQUIRE(r1.code == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(r1.out == r2.out);
    CHECK(slurp(out1).rfind("cell_lo,cell_hi,count,freq,p,deviation\n", 0) == 0);
    auto summary = nlohmann::json::parse(r1.out);
    CHECK(summary["seed"] == 12345);
    CHECK(summary["n"] == 5000);

    CHECK(nlohmann::json::parse(run(with_out(out2), 77).out)["seed"] == 77);
    std::ofstream(cfg) << "# shared settings\nseed = 5\nlevel=2   # coarse\ncases = 10\n";
    auto from_cfg = nlohmann::json::parse(run(with_out(out2, {"--config", cfg}), 77).out);
    CHECK(from_cfg["seed"] == 5);
    CHECK(from_cfg["level"] == 3);  // flag beats config
    auto flag_seed = nlohmann::json::parse(run(with_out(out2, {"--config", cfg, "--seed", "6"})).out);
    CHECK(flag_seed["seed"] == 6);

    std::ofstream(cfg) << "colour = blue\n";
    CHECK(run(with_out(out2, {"--config", cfg})).code == 2);
    for (const auto& f : {out1, out2, cfg}) std::remove(f.c_str());
}
