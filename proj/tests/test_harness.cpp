#include "gaussbm/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gbm;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

json fixture_config()
{
    return json::parse(R"({
        "suite": "entropic",
        "t_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
        "seed": 7,
        "samples": 20000,
        "distributions": [
            {"name": "a", "family": "gaussian", "cov": [[0.25]]},
            {"name": "b", "family": "gaussian", "cov": [[0.64]]}
        ],
        "pairs": [["a", "b"], ["a", "a"]]
    })");
}

CheckRecord const* find(SuiteReport const& r, std::string const& name)
{
    for (auto const& c : r.checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(std::string const& leaf)
{
    auto const p = fs::temp_directory_path() / ("gaussbm_test_harness_" + leaf);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config validation")
{
    auto j = fixture_config();
    j["t_grid"] = json::array();
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["t_grid"] = {0.5, 0.25};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["t_grid"] = {0.0, 1.5};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["suite"] = "nope";
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["pairs"] = json::parse(R"([["a", "zzz"]])");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["tolerances"] = json::parse(R"({"made_up": 1.0})");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["distributions"][0]["cov"] = json::parse("[[-1.0]]");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = fixture_config();
    j["functions"] = json::parse(R"([{"name": "f", "family": "gaussian", "a": [[1.0]]}])");
    j["function_pairs"] = json::parse(R"([{"f": "f", "g": "f", "p": [-1.0]}])");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    auto const c = parse_config(fixture_config());
    CHECK(c.t_grid.size() == 5);
    CHECK(c.seed == 7);
    CHECK(c.distributions.size() == 2);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("entropic fixture")
{
    auto const r = run(parse_config(fixture_config()));
    auto const* mid = find(r, "entropic/a~b/t=0.5");
    REQUIRE(mid);
    CHECK(std::abs(mid->value - 0.0249579) <= 1e-7);
    CHECK(mid->verdict == Verdict::pass);
    for (auto const& c : r.checks)
        CHECK(c.verdict == Verdict::pass);
    auto const* same = find(r, "entropic/a~a/t=0.25");
    REQUIRE(same);
    CHECK(std::abs(same->value) <= 1e-12);
    CHECK(r.count(Verdict::pass) == 10);
}

TEST_CASE("counterexample suite")
{
    auto const j = json::parse(R"({
        "suite": "counterexample",
        "t_grid": [0.5],
        "bodies": [
            {"name": "unit", "variant": "interval", "half_width": 1},
            {"name": "disk", "variant": "ellipsoid", "shape": [[1, 0], [0, 1]]}
        ],
        "counterexamples": [
            {"body": "disk", "shift": [1, 0], "t": 0.5},
            {"body": "unit", "shift": [6], "t": 0.5}
        ]
    })");
    auto const r = run(parse_config(j));
    REQUIRE(r.checks.size() == 2);
    // unsupported bodies give an error record and the suite carries on
    CHECK(r.checks[0].error);
    CHECK(r.checks[0].verdict == Verdict::fail);
    CHECK_FALSE(r.checks[0].diagnostic.empty());
    CHECK(r.checks[1].verdict == Verdict::pass);
    CHECK(std::abs(r.checks[1].value - (-0.3353677)) <= 1e-6);
    CHECK(r.checks[1].mode == CheckMode::negative);
}

TEST_CASE("reports are deterministic")
{
    auto j = fixture_config();
    j["suite"] = "all";
    j["samples"] = 5000;
    j["bodies"] = json::parse(R"([
        {"name": "unit", "variant": "interval", "half_width": 1},
        {"name": "two", "variant": "interval", "half_width": 2},
        {"name": "ell", "variant": "ellipsoid", "shape": [[1.5, 0.4], [0.4, 0.6]]},
        {"name": "bar", "variant": "box", "half_widths": [0.3, 2.0]}
    ])");
    j["body_pairs"] = json::parse(R"([["unit", "two"], ["ell", "bar"]])");
    j["bochner_dims"] = {1};
    j["t_grid"] = {0.0, 0.5, 1.0};
    auto const cfg = parse_config(j);
    auto const r1 = run(cfg);
    auto const r2 = run(cfg);
    CHECK(report_to_json(r1, false) == report_to_json(r2, false));
    CHECK(report_to_json(r1, false).dump() == report_to_json(r2, false).dump());
    CHECK_FALSE(report_to_json(r1, false)["metadata"].contains("timestamp"));

    auto const d1 = scratch("det1");
    auto const d2 = scratch("det2");
    for (auto const& sel : plot_selectors())
    {
        auto const f1 = emit_plot_data(r1, sel, d1);
        auto const f2 = emit_plot_data(r2, sel, d2);
        REQUIRE(f1.size() == f2.size());
        for (std::size_t i = 0; i < f1.size(); ++i)
        {
            CHECK(f1[i].filename() == f2[i].filename());
            CHECK(slurp(f1[i]) == slurp(f2[i]));
        }
    }
    CHECK_THROWS_AS(emit_plot_data(r1, "histogram", d1), std::invalid_argument);

    // the stored numbers alone reproduce every verdict
    for (auto const& c : r1.checks)
        CHECK(derive_verdict(c) == c.verdict);
}

TEST_CASE("gap-vs-t data")
{
    auto const r = run(parse_config(fixture_config()));
    auto const dir = scratch("gap");
    auto const files = emit_plot_data(r, "gap-vs-t", dir);
    REQUIRE(files.size() == 1);
    std::ifstream in(files[0]);
    std::string line;
    std::getline(in, line);
    CHECK(line == "name,suite,t,lhs,rhs,gap,tolerance,verdict");
    int equality_rows = 0;
    while (std::getline(in, line))
    {
        if (line.rfind("entropic/a~a/", 0) != 0)
            continue;
        ++equality_rows;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');)
            cols.push_back(c);
        REQUIRE(cols.size() == 8);
        CHECK(std::abs(std::stod(cols[5])) <= 1e-12);
        CHECK(cols[7] == "pass");
    }
    CHECK(equality_rows == 5);
}

TEST_CASE("verdict derivation")
{
    CheckRecord r;
    r.tolerance = 1e-6;
    r.slack = 1e-4;
    r.mode = CheckMode::at_least;
    r.value = -5e-7;
    CHECK(derive_verdict(r) == Verdict::pass);
    r.value = -5e-5;
    CHECK(derive_verdict(r) == Verdict::inconclusive);
    r.value = -5e-4;
    CHECK(derive_verdict(r) == Verdict::fail);

    r.mode = CheckMode::confidence;
    r.value = 2e-6;
    CHECK(derive_verdict(r) == Verdict::pass);
    r.value = 0;
    CHECK(derive_verdict(r) == Verdict::inconclusive);
    r.value = -2e-6;
    CHECK(derive_verdict(r) == Verdict::fail);

    r.mode = CheckMode::negative;
    r.value = -0.3;
    CHECK(derive_verdict(r) == Verdict::pass);
    r.value = 0.3;
    CHECK(derive_verdict(r) == Verdict::fail);

    r.mode = CheckMode::residual;
    r.value = -1e-7;
    CHECK(derive_verdict(r) == Verdict::pass);
    r.value = 1e-5;
    CHECK(derive_verdict(r) == Verdict::fail);

    r.mode = CheckMode::positive;
    r.value = 1;
    CHECK(derive_verdict(r) == Verdict::pass);
    r.value = NAN;
    CHECK(derive_verdict(r) == Verdict::fail);
    r.value = 1;
    r.error = true;
    CHECK(derive_verdict(r) == Verdict::fail);

    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
