#include "permboot/cli.hpp"
#include "permboot/report.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace permboot;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "permboot");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "permboot_cli_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

const char* kSmallConfig = R"({
  "name": "small",
  "scenario": "plain_indicator",
  "group_laws": [{"law": "exponential", "rate": 1.0}, {"law": "exponential", "rate": 1.5}],
  "sizes": [20, 20],
  "grid": "pooled-deciles",
  "draws": 200,
  "outer_reps": 4,
  "resample": "both"
})";

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == cli::kUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
    CHECK(run_cli({"counterexample", "--bogus"}).code == cli::kUsage);
    CHECK(run_cli({"counterexample"}).code == cli::kUsage);  // no --output or --stdout
}

TEST_CASE("counterexample table") {
    const auto r = run_cli({"counterexample", "--n", "1,5,25", "--format", "csv", "--stdout"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "n,t_n,ratio,derivative,gap");
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        CHECK(cells[2] == "-0.5");
        CHECK(cells[3] == "-1");
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("analyze the toy survival file") {
    const std::string input = std::string(PERMBOOT_DATA_DIR) + "/toy_survival.csv";
    const auto r = run_cli({"analyze", "--input", input, "--tau", "30", "--format", "csv", "--stdout"});
    REQUIRE(r.code == 0);
    CHECK(r.out ==
          "group,time,na,km\n"
          "A,1,0.33333333333333331,0.66666666666666674\n"
          "A,2,0.33333333333333331,0.66666666666666674\n"
          "A,3,1.3333333333333333,0\n");
    const auto j = run_cli({"analyze", "--input", input, "--tau", "3", "--stdout"});
    REQUIRE(j.code == 0);
    const auto doc = nlohmann::json::parse(j.out);
    CHECK(doc["groups"][0]["rmst"].get<double>() == Catch::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(run_cli({"analyze", "--input", "/nonexistent.csv", "--tau", "3", "--stdout"}).code ==
          cli::kDataError);
}

TEST_CASE("verify is reproducible and writes atomically") {
    const auto cfg = write_config("small.json", kSmallConfig);
    const auto a = scratch() / "a.json", b = scratch() / "b.json";
    const auto ra = run_cli({"verify", "--config", cfg.string(), "--seed", "42", "--threads", "1",
                             "--output", a.string()});
    const auto rb = run_cli({"verify", "--config", cfg.string(), "--seed", "42", "--threads", "3",
                             "--output", b.string(), "--csv", (scratch() / "m").string()});
    CHECK((ra.code == 0 || ra.code == cli::kVerifyFailed));
    CHECK(ra.code == rb.code);
    CHECK(ra.out.empty());
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(fs::exists(a.string() + ".tmp"));
    CHECK(fs::exists(scratch() / "m_perm_kernel.csv"));
    CHECK(fs::exists(scratch() / "m_boot_estimate.csv"));

    const auto doc = nlohmann::json::parse(slurp(a));
    CHECK(doc["seed"]["master"] == 42);
    CHECK_FALSE(doc.contains("runtime_seconds"));

    // Library call with the same parameters gives the same bytes.
    auto c = parse_config(kSmallConfig);
    c.seed.master = 42;
    CHECK(dump_json(report_to_json(conditional_cov_experiment(c, 2))) == slurp(a));
}

TEST_CASE("bad configs are data errors") {
    const auto cfg = write_config("bad.json", R"({"scenario": "plain_indicator", "sizes": [1, 2],
        "group_laws": [{"law": "uniform", "lo": 0, "hi": 1}, {"law": "uniform", "lo": 0, "hi": 1}]})");
    CHECK(run_cli({"verify", "--config", cfg.string(), "--stdout"}).code == cli::kDataError);
}

TEST_CASE("simulate, kernel and dump-fn") {
    const auto cfg = write_config("small2.json", kSmallConfig);
    const auto sim = run_cli({"simulate", "--config", cfg.string(), "--stdout"});
    REQUIRE(sim.code == 0);
    CHECK(sim.out.rfind("group,value\n", 0) == 0);
    const auto k = run_cli({"kernel", "--config", cfg.string(), "--variant", "boot", "--stdout"});
    REQUIRE(k.code == 0);
    CHECK(k.out.rfind("# {", 0) == 0);
    CHECK(k.out.find("label,g1[0]") != std::string::npos);

    const std::string input = std::string(PERMBOOT_DATA_DIR) + "/toy_survival.csv";
    const auto d = run_cli({"dump-fn", "--input", input, "--fn", "km", "--tau", "3", "--stdout"});
    REQUIRE(d.code == 0);
    std::istringstream in(d.out);
    const StepFn km = read_stepfn(in);
    CHECK(km(2.0) == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(km(3.0) == 0.0);
}

TEST_CASE("shipped configs parse and round trip") {
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(PERMBOOT_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        const ExperimentConfig c = parse_config(slurp(entry.path()));
        REQUIRE_NOTHROW(validate(c));
        CHECK(dump_json(config_to_json(c)) == dump_json(config_to_json(config_from_json(config_to_json(c)))));
        ++seen;
    }
    CHECK(seen >= 5);
}
