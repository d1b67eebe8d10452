#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "daestab/config.hpp"

using namespace daestab;
using daestab::cli::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "daestab_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json filter_model(double L, double C, double r, double g) {
    return {{"builtin", "filter"},
            {"params",
             {{"L", L},
              {"C", C},
              {"r", r},
              {"g", g},
              {"phi0", {{"kind", "odd_power"}, {"alpha", 1.0}, {"m", 2}}},
              {"phi", {{"kind", "odd_power"}, {"alpha", 1.0}, {"m", 2}}},
              {"psi", {{"kind", "odd_power"}, {"alpha", 1.0}, {"m", 2}}},
              {"h", {{"kind", "odd_power"}, {"alpha", 1.0}, {"m", 2}}},
              {"source",
               {{"kind", "damped_sine"},
                {"beta", 100.0},
                {"alpha", 1.0},
                {"omega", 5.0}}}}}};
}

json escape_model() {
    return {{"builtin", "filter"},
            {"params",
             {{"L", 10.0},
              {"C", 0.5},
              {"r", 2.0},
              {"g", 0.2},
              {"phi0", {{"kind", "neg_square"}}},
              {"phi", {{"kind", "cube"}}},
              {"psi", {{"kind", "cube"}}},
              {"h", {{"kind", "square"}}},
              {"source", {{"kind", "sinusoid"}, {"beta", 2.0}, {"omega", 1.0}}}}}};
}

} // namespace

TEST_CASE("simulate mode writes trajectory, summary and plot script") {
    fs::path dir = fresh_dir("simulate");
    json cfg;
    cfg["mode"] = "simulate";
    cfg["model"] = filter_model(500, 0.5, 2, 0.2);
    cfg["initial"] = {{"t0", 0.0}, {"x0", {0.0, 0.0, 0.0}}};
    cfg["integration"] = {{"t_end", 10.0}, {"rel_tol", 1e-8}, {"abs_tol", 1e-10}};
    cfg["output"] = {{"directory", dir.string()}};

    auto outcome = cli::run(cfg);
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "trajectory.gp"));

    json summary = json::parse(std::ifstream(dir / "summary.json"));
    CHECK(summary.at("status") == "Completed");
    CHECK(summary.at("max_norm").get<double>() > 0.0);

    std::string csv = slurp(dir / "trajectory.csv");
    CHECK(csv.rfind("t,x1,x2,x3,constraint_residual,dae_residual,step_size\n", 0) ==
          0);
    CHECK(csv.find("# status=Completed") != std::string::npos);
}

TEST_CASE("escape expectation controls the exit code") {
    json cfg;
    cfg["mode"] = "simulate";
    cfg["model"] = escape_model();
    cfg["initial"] = {{"t0", 0.0}, {"x0", {2.45, -20.625125, 2.5}}};
    cfg["integration"] = {{"t_end", 50.0}};

    fs::path d1 = fresh_dir("escape_ok");
    cfg["output"] = {{"directory", d1.string()}};
    cfg["expect"] = {{"status", "EscapeDetected"}};
    CHECK(cli::run(cfg).exit_code == 0);

    // the same run with a bounded expectation is a regression signal
    fs::path d2 = fresh_dir("escape_fail");
    cfg["output"] = {{"directory", d2.string()}};
    cfg["expect"] = {{"status", "Completed"}};
    CHECK(cli::run(cfg).exit_code == 2);

    json summary = json::parse(std::ifstream(d2 / "summary.json"));
    CHECK(summary.at("status") == "EscapeDetected");
    CHECK(summary.at("expect_ok") == false);
    CHECK(summary.contains("escape"));
}

TEST_CASE("z0 auto-consistency and --t-end override") {
    fs::path dir = fresh_dir("z0");
    json cfg;
    cfg["mode"] = "simulate";
    cfg["model"] = filter_model(500, 0.5, 2, 0.2);
    cfg["initial"] = {{"t0", 0.0}, {"z0", {0.3, -0.2}}};
    cfg["integration"] = {{"t_end", 50.0}};
    cfg["output"] = {{"directory", dir.string()}};
    cli::Overrides ov;
    ov.t_end = 2.0;
    auto outcome = cli::run(cfg, ov);
    CHECK(outcome.exit_code == 0);
    json summary = json::parse(std::ifstream(dir / "summary.json"));
    CHECK(summary.at("t_final").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("decompose mode writes the projector report") {
    fs::path dir = fresh_dir("decompose");
    json cfg;
    cfg["mode"] = "decompose";
    cfg["model"] = filter_model(500, 0.5, 2, 0.2);
    cfg["output"] = {{"directory", dir.string()}};
    CHECK(cli::run(cfg).exit_code == 0);
    json dec = json::parse(std::ifstream(dir / "decomposition.json"));
    CHECK(dec.at("a") == 2);
    CHECK(dec.at("d") == 1);
    CHECK(dec.at("pass") == true);
    CHECK(dec.at("P1").at(0).at(0).get<double>() == doctest::Approx(1.0));
    CHECK(dec.at("G_inv").at(0).at(0).get<double>() == doctest::Approx(0.002));
}

TEST_CASE("generic matrices model with a polynomial right-hand side") {
    fs::path dir = fresh_dir("generic");
    json cfg;
    cfg["mode"] = "simulate";
    cfg["model"] = {{"matrices", {{"A", {{1.0}}}, {"B", {{1.0}}}}},
                    {"f", {{"terms", {json::array()}}}}};
    cfg["initial"] = {{"t0", 0.0}, {"x0", {1.0}}};
    cfg["integration"] = {{"t_end", 1.0}, {"rel_tol", 1e-10}, {"abs_tol", 1e-12}};
    cfg["output"] = {{"directory", dir.string()}};
    CHECK(cli::run(cfg).exit_code == 0);
    json summary = json::parse(std::ifstream(dir / "summary.json"));
    CHECK(summary.at("status") == "Completed");
    CHECK(summary.at("max_norm").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("certificate modes write reports and exit codes") {
    // quick instability certificate
    fs::path dir = fresh_dir("cert_instab");
    json cfg;
    cfg["mode"] = "check-instability";
    cfg["model"] = escape_model();
    cfg["certificate"] = {{"sampler", {{"count", 500}, {"seed", 0}}}};
    cfg["output"] = {{"directory", dir.string()}};
    auto outcome = cli::run(cfg);
    CHECK(outcome.exit_code == 0);
    json rep = json::parse(std::ifstream(dir / "certificate.json"));
    CHECK(rep.at("verdict") == "NotFalsified");
    CHECK(rep.contains("alpha_calibrated"));
    CHECK(fs::exists(dir / "certificate.txt"));

    // falsified basis invertibility must exit 2
    fs::path dir2 = fresh_dir("cert_falsified");
    json cfg2;
    cfg2["mode"] = "check-stability";
    cfg2["model"] = {{"builtin", "filter"},
                     {"params",
                      {{"L", 300.0},
                       {"C", 0.5},
                       {"r", 2.0},
                       {"g", 0.2},
                       {"phi0", {{"kind", "odd_power"}, {"alpha", 0.5}, {"m", 2}}},
                       {"phi", {{"kind", "sine"}, {"alpha", 2.0}}},
                       {"psi", {{"kind", "sine"}, {"alpha", 2.0}}},
                       {"h", {{"kind", "sine"}, {"alpha", 3.0}}},
                       {"source",
                        {{"kind", "sinusoid"}, {"beta", 2.0}, {"omega", 1.0}}}}}};
    cfg2["certificate"] = {
        {"radius", 10.0},
        {"sampler",
         {{"count", 2000}, {"seed", 0}, {"z_box", {{-8.0, 8.0}, {-8.0, 8.0}}}}}};
    cfg2["output"] = {{"directory", dir2.string()}};
    auto outcome2 = cli::run(cfg2);
    CHECK(outcome2.exit_code == 2);
    json rep2 = json::parse(std::ifstream(dir2 / "certificate.json"));
    CHECK(rep2.at("verdict") == "Falsified");
}

TEST_CASE("sweep runs concurrently and writes an index") {
    fs::path dir = fresh_dir("sweep");
    json cfg;
    cfg["mode"] = "sweep";
    cfg["model"] = filter_model(500, 0.5, 2, 0.2);
    cfg["initial"] = {{"t0", 0.0}, {"x0", {0.0, 0.0, 0.0}}};
    cfg["integration"] = {{"t_end", 5.0}};
    cfg["sweep"] = {{"pointer", "/model/params/L"}, {"values", {100.0, 300.0, 500.0}}};
    cfg["output"] = {{"directory", dir.string()}};
    CHECK(cli::run(cfg).exit_code == 0);
    json index = json::parse(std::ifstream(dir / "index.json"));
    CHECK(index.at("runs").size() == 3);
    for (const auto& run : index.at("runs")) {
        CHECK(run.at("status") == "Completed");
        CHECK(fs::exists(dir / run.at("dir").get<std::string>() / "trajectory.csv"));
    }
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    json cfg;
    cfg["mode"] = "simulate";
    cfg["model"] = escape_model();
    cfg["initial"] = {{"t0", 0.0}, {"x0", {2.45, -20.625125, 2.5}}};
    cfg["integration"] = {{"t_end", 50.0}};

    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    cfg["output"] = {{"directory", d1.string()}};
    CHECK(cli::run(cfg).exit_code == 0);
    cfg["output"] = {{"directory", d2.string()}};
    CHECK(cli::run(cfg).exit_code == 0);
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));
    CHECK(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));

    json cert;
    cert["mode"] = "check-instability";
    cert["model"] = escape_model();
    cert["certificate"] = {{"sampler", {{"count", 300}, {"seed", 7}}}};
    fs::path c1 = fresh_dir("det3"), c2 = fresh_dir("det4");
    cert["output"] = {{"directory", c1.string()}};
    CHECK(cli::run(cert).exit_code == 0);
    cert["output"] = {{"directory", c2.string()}};
    CHECK(cli::run(cert).exit_code == 0);
    CHECK(slurp(c1 / "certificate.json") == slurp(c2 / "certificate.json"));
}

TEST_CASE("bad configs exit 1 with a diagnostic") {
    fs::path dir = fresh_dir("bad");
    fs::path empty = dir / "empty.json";
    std::ofstream(empty) << "";
    auto outcome = cli::run_file(empty.string());
    CHECK(outcome.exit_code == 1);
    CHECK_FALSE(outcome.message.empty());

    fs::path nomode = dir / "nomode.json";
    std::ofstream(nomode) << "{}";
    CHECK(cli::run_file(nomode.string()).exit_code == 1);

    fs::path badmat = dir / "badmat.json";
    std::ofstream(badmat) << R"({"mode":"decompose","model":{"matrices":{
        "A":[[1,0],[0,0]],"B":[[1,0]]}}})";
    auto bm = cli::run_file(badmat.string());
    CHECK(bm.exit_code == 1);

    CHECK(cli::run_file((dir / "missing.json").string()).exit_code == 1);
}

TEST_CASE("repository example configs run and validate their pins") {
    fs::path configs(DAESTAB_CONFIG_DIR);
    REQUIRE(fs::exists(configs));
    size_t count = 0;
    for (const auto& entry : fs::directory_iterator(configs)) {
        if (entry.path().extension() != ".json")
            continue;
        ++count;
        fs::path dir = fresh_dir("cfg_" + entry.path().stem().string());
        cli::Overrides ov;
        ov.out_dir = dir.string();
        auto outcome = cli::run_file(entry.path().string(), ov);
        INFO(entry.path().filename().string(), ": ", outcome.message);
        CHECK(outcome.exit_code == 0);
    }
    CHECK(count >= 8); // the experiment suite ships with the repository
}
