#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ergolab/cli.hpp"

using namespace ergo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("ergolab-cli-" + std::to_string(rand()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> run_config(const std::string& json_text, std::ostream& log) {
    RunConfig cfg = validate(json_text);
    return run(cfg, log);
}

}  // namespace

TEST_CASE("validation accepts a minimal simulate config") {
    RunConfig cfg = validate(R"({"command": "simulate", "system": "doubling",
                                 "seed_state": [0.3], "length": 5})");
    CHECK(cfg.command == "simulate");
    CHECK(cfg.length == 5);
    CHECK(cfg.has_seed_state);
}

TEST_CASE("validation aggregates every violation into one report") {
    try {
        validate(R"({"command": "spectrum", "system": "lorentz-gas", "N": 0, "frobnicate": 1})");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("unknown key \"frobnicate\"") != std::string::npos);
        CHECK(msg.find("lorentz-gas") != std::string::npos);
        CHECK(msg.find("doubling, tent, logistic, lozi, henon") != std::string::npos);
        CHECK(msg.find("N must be >= 1") != std::string::npos);
    }
    CHECK_THROWS_AS(validate("not json"), config_error);
    CHECK_THROWS_AS(validate(R"({"command": "what", "system": "doubling"})"), config_error);
    CHECK_THROWS_AS(validate(R"({"command": "variance", "system": "doubling", "n": 4,
                                 "sample_count": 10})"),
                    config_error);
    CHECK_THROWS_AS(validate(R"({"command": "clt", "system": "doubling", "n": 1000,
                                 "phi": "nosuchphi"})"),
                    config_error);
    CHECK_THROWS_AS(validate(R"({"command": "tower", "system": "doubling", "base": "0..1/3"})"),
                    config_error);
    CHECK_THROWS_AS(validate(R"({"command": "variance", "system": "doubling", "n": 4,
                                 "formats": ["svg"]})"),
                    config_error);
}

TEST_CASE("set overrides rewrite keys before validation") {
    std::string doc = R"({"command": "spectrum", "system": "doubling", "N": 4})";
    std::string out = apply_overrides(doc, {"N=16", "system=tent"});
    RunConfig cfg = validate(out);
    CHECK(cfg.bins == 16);
    CHECK(cfg.system == "tent");
    CHECK_THROWS_AS(apply_overrides(doc, {"broken"}), config_error);
}

TEST_CASE("spectrum run writes the exact doubling summary") {
    TempDir tmp;
    std::ostringstream log;
    auto files = run_config(R"({"command": "spectrum", "system": "doubling", "N": 4,
                                "output_dir": ")" + tmp.path.string() + R"("})",
                            log);
    REQUIRE(files.size() == 2);
    auto doc = nlohmann::json::parse(slurp(files[0]));
    CHECK(doc["N"] == 4);
    CHECK(std::fabs(doc["lambda2"].get<double>()) <= 1e-12);
    CHECK(doc["gap"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(log.str().find("spectrum:") != std::string::npos);
}

TEST_CASE("variance run lands within three standard errors of the oracle") {
    TempDir tmp;
    std::ostringstream log;
    auto files = run_config(R"({"command": "variance", "system": "doubling",
                                "family": "birkhoff", "phi": "cos2pi", "n": 10,
                                "sample_count": 20000, "master_seed": 1, "workers": 2,
                                "formats": ["json"],
                                "output_dir": ")" + tmp.path.string() + R"("})",
                            log);
    REQUIRE(files.size() == 1);
    auto doc = nlohmann::json::parse(slurp(files[0]));
    double value = doc["value"].get<double>();
    double se = doc["std_error"].get<double>();
    CHECK(std::fabs(value - 0.05) <= 3.0 * se);
    CHECK(doc["seed"] == 1);
}

TEST_CASE("tower run reproduces the geometric-tail summary") {
    TempDir tmp;
    std::ostringstream log;
    auto files = run_config(R"({"command": "tower", "system": "doubling",
                                "base": "0/1..1/2", "q_max": 30,
                                "output_dir": ")" + tmp.path.string() + R"("})",
                            log);
    REQUIRE(files.size() == 2);
    auto doc = nlohmann::json::parse(slurp(files[0]));
    CHECK(std::fabs(doc["kac_product"].get<double>() - 1.0) <= 1e-6);
    CHECK(std::fabs(doc["fitted_log_theta"].get<double>() + std::log(2.0)) <= 1e-9);
    CHECK(doc["branch_count"] == 30);
}

TEST_CASE("reruns and worker counts give byte-identical artifacts") {
    TempDir tmp1, tmp2, tmp3;
    std::ostringstream log;
    std::string base = R"({"command": "devroye", "system": "doubling",
        "families": [{"family": "birkhoff", "phi": "cos2pi"}], "n_grid": [5, 10],
        "sample_count": 2000, "master_seed": 9, "formats": ["csv", "json", "svg"],
        "workers": 1, "output_dir": ")";
    auto f1 = run_config(base + tmp1.path.string() + R"("})", log);
    auto f2 = run_config(base + tmp2.path.string() + R"("})", log);
    std::string alt = base;
    alt.replace(alt.find("\"workers\": 1"), 12, "\"workers\": 4");
    auto f3 = run_config(alt + tmp3.path.string() + R"("})", log);
    REQUIRE(f1.size() == 3);
    REQUIRE(f2.size() == 3);
    REQUIRE(f3.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(slurp(f1[i]) == slurp(f2[i]));
        CHECK(slurp(f1[i]) == slurp(f3[i]));
        // Same artifact names regardless of the worker knob.
        CHECK(fs::path(f1[i]).filename() == fs::path(f3[i]).filename());
    }
}

TEST_CASE("computational failures leave no partial artifacts") {
    TempDir tmp;
    std::ostringstream log;
    // Far-out parameters: every seed escapes, discards blow the 1% budget.
    RunConfig cfg = validate(R"({"command": "variance", "system": "henon",
        "params": {"a": 3.0, "b": 0.3}, "n": 5, "sample_count": 1000,
        "output_dir": ")" + tmp.path.string() + R"("})");
    CHECK_THROWS_AS(run(cfg, log), sampling_error);
    CHECK(fs::is_empty(tmp.path));

    RunConfig shallow = validate(R"({"command": "tower", "system": "doubling",
        "base": "0/1..1/2", "q_max": 3,
        "output_dir": ")" + tmp.path.string() + R"("})");
    CHECK_THROWS_AS(run(shallow, log), truncation_error);
    CHECK(fs::is_empty(tmp.path));
}

TEST_CASE("correlation and clt commands produce their records") {
    TempDir tmp;
    std::ostringstream log;
    auto files = run_config(R"({"command": "correlations", "system": "doubling",
        "phi": "cos2pi", "max_lag": 5, "method": "operator", "N": 256,
        "formats": ["csv", "json"],
        "output_dir": ")" + tmp.path.string() + R"("})",
                            log);
    REQUIRE(files.size() == 2);
    auto doc = nlohmann::json::parse(slurp(files[1].find(".json") != std::string::npos
                                               ? files[1]
                                               : files[0]));
    CHECK(doc["method"] == "operator");
    auto values = doc["values"];
    REQUIRE(values.size() == 6);
    for (size_t k = 1; k < values.size(); ++k)
        CHECK(std::fabs(values[k].get<double>()) <= 5e-3);

    auto clt_files = run_config(R"({"command": "clt", "system": "doubling", "phi": "cos2pi",
        "n": 1000, "sample_count": 10000, "master_seed": 1, "workers": 2,
        "formats": ["json"],
        "output_dir": ")" + tmp.path.string() + R"("})",
                                log);
    auto clt_doc = nlohmann::json::parse(slurp(clt_files[0]));
    CHECK(clt_doc["p_value"].get<double>() > 0.01);
}

TEST_CASE("simulate writes the orbit") {
    TempDir tmp;
    std::ostringstream log;
    auto files = run_config(R"({"command": "simulate", "system": "henon",
        "seed_state": [0.0, 0.0], "burn_in": 10, "length": 20,
        "output_dir": ")" + tmp.path.string() + R"("})",
                            log);
    REQUIRE(files.size() == 2);
    std::string csv = slurp(files[0].find(".csv") != std::string::npos ? files[0] : files[1]);
    CHECK(csv.rfind("step,x,y\n", 0) == 0);
    int rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    CHECK(rows == 21);
}

TEST_CASE("run_cli maps error classes to exit codes") {
    TempDir tmp;
    auto write_config = [&](const std::string& name, const std::string& text) {
        std::ofstream out(tmp.path / name);
        out << text;
        return (tmp.path / name).string();
    };
    std::ostringstream out, err;
    std::string good = write_config("good.json",
                                    R"({"command": "spectrum", "system": "doubling", "N": 2,
                                        "output_dir": ")" + tmp.path.string() + R"("})");
    CHECK(run_cli(good, {}, out, err) == 0);

    std::string bad = write_config("bad.json", R"({"command": "spectrum", "system": "nope"})");
    CHECK(run_cli(bad, {}, out, err) == 1);

    std::string failing = write_config("fail.json",
                                       R"({"command": "tower", "system": "doubling",
                                           "base": "0/1..1/2", "q_max": 2,
                                           "output_dir": ")" + tmp.path.string() + R"("})");
    CHECK(run_cli(failing, {}, out, err) == 2);

    CHECK(run_cli((tmp.path / "missing.json").string(), {}, out, err) == 1);
    CHECK(run_cli(good, {"N=8"}, out, err) == 0);
}
