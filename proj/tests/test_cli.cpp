#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "hfit/error.hpp"
#include "hfit/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the command-line tool with stderr folded into the captured output.
Result hfit_run(const std::string& args)
{
    const std::string cmd = std::string(HFIT_BIN) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, p)) {
        r.out.append(buf, n);
    }
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / "hfit-test-cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const std::string small = " --fis-kind type1 --gp-population 10 --gp-pool 5 --gp-iterations 2 --de-population 8"
                          " --de-iterations 10 --plant-train 50 --plant-test 30 -q";

} // namespace

TEST_CASE("train, describe, evaluate and export from the command line")
{
    const auto dir = fresh_dir("flow");
    const auto out = (dir / "run").string();
    const auto t = hfit_run("train" + small + " --repetitions 2 -o " + out);
    REQUIRE(t.code == 0);
    CHECK(t.out.find("best repetition") != std::string::npos);
    CHECK(fs::exists(dir / "run" / "summary.csv"));

    const auto d = hfit_run("describe " + out + "/model.json");
    CHECK(d.code == 0);
    CHECK(d.out.find("parameters, features {") != std::string::npos);

    const auto e = hfit_run("evaluate " + out + "/model.json --part test --predictions " + (dir / "p.csv").string());
    CHECK(e.code == 0);
    CHECK(e.out.rfind("rmse ", 0) == 0);
    CHECK(fs::exists(dir / "p.csv"));

    const auto x = hfit_run("export-pareto " + out);
    CHECK(x.code == 0);
    CHECK(fs::exists(dir / "run" / "pareto_front.csv"));

    SUBCASE("config file with flag overrides")
    {
        std::ofstream(dir / "cfg.json") << R"({"seed": 9, "gp": {"iterations": 50}})";
        const auto p = hfit_run("train --config " + (dir / "cfg.json").string() + " --gp-iterations 3 --print-config");
        CHECK(p.code == 0);
        CHECK(p.out.find("\"seed\": 9") != std::string::npos);
        CHECK(p.out.find("\"iterations\": 3") != std::string::npos);
    }
    SUBCASE("feature mismatch")
    {
        const auto r = hfit_run("evaluate " + out + "/model.json --data mackey-glass");
        CHECK(r.code == hfit::exit_code(hfit::ErrorKind::feature_mismatch));
        CHECK(r.out.find("expects 2 features") != std::string::npos);
    }
}

TEST_CASE("errors map to distinct exit codes")
{
    using hfit::ErrorKind;
    using hfit::exit_code;
    const auto dir = fresh_dir("errors");

    SUBCASE("configuration")
    {
        const auto r = hfit_run("train --gp-crossover 0.8 --gp-mutation 0.5 --print-config");
        CHECK(r.code == exit_code(ErrorKind::config_error));
        CHECK(r.out.find("gp.mutation_probability") != std::string::npos);
        std::ofstream(dir / "bad.json") << "{\"seed\": ";
        CHECK(hfit_run("train --config " + (dir / "bad.json").string()).code == exit_code(ErrorKind::config_error));
    }
    SUBCASE("missing data file")
    {
        const auto r = hfit_run("train" + small + " --data csv --data-path " + (dir / "none.csv").string()
            + " --target y -o " + (dir / "o").string());
        CHECK(r.code == exit_code(ErrorKind::file_not_found));
    }
    SUBCASE("ragged and non-numeric rows")
    {
        std::ofstream(dir / "ragged.csv") << "a,b,y\n1,2,3\n1,2\n";
        std::ofstream(dir / "text.csv") << "a,b,y\n1,2,3\n1,x,3\n";
        const auto r = hfit_run("train" + small + " --data csv --data-path " + (dir / "ragged.csv").string()
            + " --target y -o " + (dir / "o").string());
        CHECK(r.code == exit_code(ErrorKind::ragged_row));
        CHECK(r.out.find(":3") != std::string::npos);
        const auto t = hfit_run("train" + small + " --data csv --data-path " + (dir / "text.csv").string()
            + " --target y -o " + (dir / "o").string());
        CHECK(t.code == exit_code(ErrorKind::non_numeric));
    }
    SUBCASE("malformed model")
    {
        std::ofstream(dir / "m.json") << "{\"format\": \"hfit-model\", ";
        const auto r = hfit_run("describe " + (dir / "m.json").string());
        CHECK(r.code == exit_code(ErrorKind::parse_error));
        CHECK(r.out.find("at byte") != std::string::npos);
    }
    SUBCASE("single-objective run has no front")
    {
        const auto out = (dir / "single").string();
        REQUIRE(hfit_run("train" + small + " --mode single -o " + out).code == 0);
        CHECK(hfit_run("export-pareto " + out).code == exit_code(ErrorKind::no_pareto_front));
    }
    SUBCASE("usage errors")
    {
        CHECK(hfit_run("").code != 0);
        CHECK(hfit_run("frobnicate").code != 0);
    }
}
