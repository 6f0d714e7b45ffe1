#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sfl/cli.hpp"
#include "sfl/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("sfl_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = scratch_dir() / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::vector<const char*> argv{"spectral-flow-lab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = sfl::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Runs the installed binary and returns its exit status.
int run_binary(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" SFL_CLI_PATH "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

const json kSingleSite = {{"potential", {{"0", 1.0}}}, {"band_grid", {{"min", -1.0}, {"max", 1.0}, {"points", 5}}}};

}  // namespace

TEST_CASE("ssf CSV layout and values") {
    const auto cfg = write_config("single.json", kSingleSite);
    const Run r = run({"ssf", "--config", cfg.string()});
    CHECK(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"lambda", "xi_ac", "xi_ac_err", "det_re", "det_im", "theta1", "theta2",
                                              "unitarity_resid", "status"});
    // Grid order and the lambda = 0 row.
    CHECK(std::stod(rows[1][0]) == -1.0);
    CHECK(std::stod(rows[5][0]) == 1.0);
    const auto& mid = rows[3];
    CHECK(std::stod(mid[0]) == 0.0);
    CHECK(std::stod(mid[1]) == doctest::Approx(0.1475836).epsilon(1e-6));
    CHECK(std::stod(mid[3]) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(std::stod(mid[4]) == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(mid[8] == "ok");
}

TEST_CASE("ssf JSON manifest") {
    json j = kSingleSite;
    j["output"] = {{"format", "json"}};
    const Run r = run({"ssf", "--config", write_config("single_json.json", j).string()});
    CHECK(r.code == 0);
    const json m = json::parse(r.out);
    CHECK(m["schema"] == 1);
    CHECK(m["command"] == "ssf");
    CHECK(m["records"].size() == 5);
    CHECK(m["config"]["r_nodes"] == 32);
    bool found = false;
    for (const auto& s : m["singular_steps"]) {
        if (s["value"] == 1) {
            found = true;
            CHECK(s["lo"].get<double>() == 2.0);
            CHECK(s["hi"].get<double>() == doctest::Approx(2.2360680).epsilon(1e-7));
        }
    }
    CHECK(found);
    CHECK(m["singular_steps"].back()["hi"].is_null());
}

TEST_CASE("empty potential gives a zero profile") {
    const json j = {{"potential", json::object()}, {"band_grid", {{"min", -1.5}, {"max", 1.5}, {"points", 7}}}};
    const Run r = run({"ssf", "--config", write_config("empty.json", j).string()});
    CHECK(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 8);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][1]) == 0.0);
        CHECK(std::stod(rows[i][3]) == 1.0);
        CHECK(std::stod(rows[i][4]) == 0.0);
    }
}

TEST_CASE("smatrix manifest") {
    json j = kSingleSite;
    j["output"] = {{"format", "json"}};
    const Run r = run({"smatrix", "--config", write_config("smatrix.json", j).string()});
    CHECK(r.code == 0);
    const json m = json::parse(r.out);
    CHECK(m["schema"] == 1);
    for (const auto& rec : m["records"]) {
        CHECK(rec["mu"].size() == 256);
        const double xi = rec["xi_ac"].get<double>();
        CHECK(std::abs(rec["mu_integral"].get<double>() - xi) <= 1.0 / 256 + 1e-6);
        if (rec["lambda"] == 0.0) {
            CHECK(rec["det_re"].get<double>() == doctest::Approx(0.6).epsilon(1e-12));
            CHECK(rec["det_im"].get<double>() == doctest::Approx(-0.8).epsilon(1e-12));
        }
    }

    // r = 0 scales the potential away: S = I everywhere.
    json zero = j;
    zero["r"] = 0.0;
    const Run z = run({"smatrix", "--config", write_config("smatrix_r0.json", zero).string()});
    CHECK(z.code == 0);
    for (const auto& rec : json::parse(z.out)["records"]) {
        const auto& s = rec["s"];
        CHECK(s[0][0][0] == 1.0);
        CHECK(s[0][1][0] == 0.0);
        CHECK(s[1][0][1] == 0.0);
        CHECK(s[1][1][0] == 1.0);
        for (int k = 0; k < 256; ++k) CHECK(rec["mu"][k] == 0);
    }
}

TEST_CASE("output is byte-identical across thread counts") {
    const json j = {{"path", json::array({json{{"0", 1.0}}, json{{"0", 1.0}, {"3", -2.0}}, json{{"1", 0.5}}})},
                    {"band_grid", {{"min", -1.8}, {"max", 1.8}, {"points", 25}}}};
    const auto cfg = write_config("threads.json", j).string();
    const Run one = run({"smatrix", "--config", cfg, "--threads", "1"});
    const Run four = run({"smatrix", "--config", cfg, "--threads", "4"});
    const Run seven = run({"smatrix", "--config", cfg, "--threads", "7"});
    CHECK(one.code == 0);
    CHECK(one.out == four.out);
    CHECK(one.out == seven.out);
    CHECK(csv_rows(one.out).size() == 26);
}

TEST_CASE("output destination precedence") {
    json j = kSingleSite;
    const fs::path from_config = scratch_dir() / "from_config.csv";
    j["output"] = {{"path", from_config.string()}};
    const auto cfg = write_config("dest.json", j).string();

    Run r = run({"ssf", "--config", cfg});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    const std::string reference = slurp(from_config);
    CHECK(reference.rfind("lambda,", 0) == 0);

    const fs::path from_env = scratch_dir() / "from_env.csv";
    ::setenv(sfl::kOutputEnv, from_env.c_str(), 1);
    r = run({"ssf", "--config", cfg});
    CHECK(slurp(from_env) == reference);

    const fs::path from_flag = scratch_dir() / "from_flag.csv";
    r = run({"ssf", "--config", cfg, "--output", from_flag.string()});
    CHECK(slurp(from_flag) == reference);
    ::unsetenv(sfl::kOutputEnv);
}

TEST_CASE("config errors exit with 3") {
    CHECK(run({"ssf", "--config", (scratch_dir() / "missing.json").string()}).code == 3);
    CHECK(run({"ssf"}).code == 3);
    CHECK(run({"bogus"}).code == 3);
    const fs::path bad = scratch_dir() / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(run({"ssf", "--config", bad.string()}).code == 3);

    json wide = kSingleSite;
    wide["band_grid"] = {{"min", -2.0}, {"max", 1.0}, {"points", 5}};
    CHECK(run({"ssf", "--config", write_config("wide.json", wide).string()}).code == 3);
    json unknown = kSingleSite;
    unknown["colour"] = "blue";
    CHECK(run({"ssf", "--config", write_config("unknown.json", unknown).string()}).code == 3);
    json both = kSingleSite;
    both["path"] = json::array({json{{"0", 1.0}}});
    CHECK(run({"ssf", "--config", write_config("both.json", both).string()}).code == 3);
    CHECK(run({"verify", "--suite", "nope", "--config", write_config("ok.json", kSingleSite).string()}).code == 3);
    CHECK(run({"ssf", "--config", write_config("ok2.json", kSingleSite).string(), "--threads", "0"}).code == 3);
}

TEST_CASE("domain errors exit with 2 and keep the grid rectangular") {
    // Enormous couplings make 1 + T0 J numerically singular at lambda = 1.
    const json j = {{"potential", {{"0", 1e13}, {"3", -1e13}}},
                    {"band_grid", {{"min", 0.5}, {"max", 1.0}, {"points", 2}}}};
    const Run r = run({"ssf", "--config", write_config("resonance.json", j).string()});
    CHECK(r.code == 2);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2][8] == "resonance");
    CHECK(rows[2][1] == "nan");
    CHECK(r.err.find("resonance") != std::string::npos);
}

TEST_CASE("invariant failures exit with 1") {
    // The r-quadrature cannot resolve this coupling; the Birman-Krein cross-check flags it.
    const json j = {{"potential", {{"0", 1e13}, {"3", -1e13}}},
                    {"band_grid", {{"min", 0.5}, {"max", 0.5}, {"points", 1}}}};
    const Run r = run({"ssf", "--config", write_config("flagged.json", j).string()});
    CHECK(r.code == 1);
    CHECK(csv_rows(r.out)[1][8] == "flagged");
}

TEST_CASE("verify suites") {
    json j = kSingleSite;
    j["output"] = {{"format", "json"}};
    const auto cfg = write_config("verify.json", j).string();

    const Run gauge = run({"verify", "--suite", "gauge", "--config", cfg});
    CHECK(gauge.code == 0);
    const json g = json::parse(gauge.out);
    CHECK(g["schema"] == 1);
    CHECK(g["summary"]["passed"] == true);
    bool saw_gauge = false;
    for (const auto& c : g["checks"]) {
        if (c["name"] == "gauge_identity") {
            saw_gauge = true;
            CHECK(c["residual"].get<double>() <= 1e-10);
        }
    }
    CHECK(saw_gauge);

    const Run texp = run({"verify", "--suite", "texp", "--config", cfg});
    CHECK(texp.code == 0);
    for (const auto& c : json::parse(texp.out)["checks"])
        if (c["name"] == "det_lemma") CHECK(c["residual"].get<double>() <= 1e-8);

    json empty = {{"potential", json::object()}, {"band_grid", {{"min", -1.0}, {"max", 1.0}, {"points", 3}}}};
    const Run all = run({"verify", "--config", write_config("verify_empty.json", empty).string()});
    CHECK(all.code == 0);
    CHECK(all.out.rfind("suite,name,residual,threshold,status", 0) == 0);
    CHECK(all.out.find(",fail") == std::string::npos);
}

TEST_CASE("the installed binary honours the exit-code contract") {
    const auto ok = write_config("bin_ok.json", kSingleSite).string();
    const fs::path env_out = scratch_dir() / "bin_env.csv";
    CHECK(run_binary("ssf --config \"" + ok + "\"") == 0);
    CHECK(run_binary("ssf --config \"" + ok + "\"", std::string(sfl::kOutputEnv) + "=\"" + env_out.string() + "\"") == 0);
    CHECK(slurp(env_out).rfind("lambda,xi_ac", 0) == 0);
    CHECK(run_binary("ssf --config /nonexistent/config.json") == 3);
    const json res = {{"potential", {{"0", 1e13}, {"3", -1e13}}},
                      {"band_grid", {{"min", 1.0}, {"max", 1.0}, {"points", 1}}}};
    CHECK(run_binary("ssf --config \"" + write_config("bin_res.json", res).string() + "\"") == 2);
    const json flag = {{"potential", {{"0", 1e13}, {"3", -1e13}}},
                       {"band_grid", {{"min", 0.5}, {"max", 0.5}, {"points", 1}}}};
    CHECK(run_binary("smatrix --config \"" + write_config("bin_flag.json", flag).string() + "\"") == 1);
    fs::remove_all(scratch_dir());
}
