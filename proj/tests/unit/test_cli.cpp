#include "fbmreg/io.hpp"
#include "fbmreg/simulate.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#ifndef FBMREG_CLI_PATH
#error "FBMREG_CLI_PATH must point at the fbmreg executable"
#endif

namespace fs = std::filesystem;
using namespace fbmreg;

namespace {

struct RunResult {
    int exit_code{-1};
    std::string out;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(FBMREG_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (p == nullptr) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p) != nullptr) r.out += buf.data();
    const int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fbmreg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateIsDeterministic) {
    ASSERT_EQ(run("simulate --test-point 1 --seed 7 --out-dir " + path("a")).exit_code, 0);
    ASSERT_EQ(run("simulate --test-point 1 --seed 7 --out-dir " + path("b")).exit_code, 0);
    for (const char* f : {"ref.csv", "tpl.csv", "params.json"}) {
        EXPECT_EQ(read_file(dir_ / "a" / f), read_file(dir_ / "b" / f)) << f;
    }
}

TEST_F(Cli, SimulateUnknownTestPoint) {
    const RunResult r = run("simulate --test-point 99 --seed 1 --out-dir " + path("x"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.out.find("1..10"), std::string::npos);
}

TEST_F(Cli, SimulateManifestRecordsParameters) {
    ASSERT_EQ(run("simulate --test-point 5 --seed 1 --out-dir " + path("s")).exit_code, 0);
    const Json j = Json::parse(read_file(dir_ / "s" / "params.json"));
    EXPECT_EQ(j["params"]["hurst"].get<double>(), 0.35);
    EXPECT_EQ(read_fragment(dir_ / "s" / "ref.csv").size(), 23);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("simulate --test-point 1").exit_code, 2);  // missing --seed
    EXPECT_EQ(run("crlb --test-point 1 --bogus").exit_code, 2);
    EXPECT_EQ(run("frobnicate").exit_code, 2);
    EXPECT_EQ(run("").exit_code, 2);
    EXPECT_EQ(run("estimate --ref /nonexistent --tpl /nonexistent --init 0,0,0,1").exit_code, 2);
}

TEST_F(Cli, CrlbPrintsBound) {
    const RunResult r = run("crlb --test-point 1 --out " + path("c.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json j = Json::parse(read_file(path("c.json")));
    EXPECT_NEAR(j["sigma_rst"]["dt"].get<double>(), 0.048, 0.05 * 0.048);
    EXPECT_FALSE(j.contains("cov"));
    ASSERT_EQ(run("crlb --test-point 2 --full --out " + path("f.json")).exit_code, 0);
    const Json f = Json::parse(read_file(path("f.json")));
    EXPECT_EQ(f["cov"].size(), 8u);
}

TEST_F(Cli, CrlbExplicitParameters) {
    const RunResult r = run("crlb --params 5,5,0.65,0.95,0.25,0.25,17,1.025 --out " + path("c.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json j = Json::parse(read_file(path("c.json")));
    EXPECT_NEAR(j["sigma_rst"]["alpha_deg"].get<double>(), 0.447, 0.05 * 0.447);
}

TEST_F(Cli, ModelErrorExitCode) {
    // k_rt = 0 leaves the RST block of the Fisher matrix empty.
    const RunResult r = run("crlb --params 5,5,0.65,0,0.25,0.25,17,1.025");
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.out.find("SingularFim"), std::string::npos);
}

TEST_F(Cli, EstimateSelfRegistrationAndSchema) {
    const TestPoint tp = test_point(1);
    FullParams p = tp.params;
    p.rst = RstParams{};
    const Fragment ref(simulate_pair(p, {13, 7}, {1e-4, 1e-4}, 3).reference.pixels(), 0.0);
    write_fragment(path("ref.csv"), ref);
    write_fragment(path("tpl.csv"), ref.center_crop(7));
    const std::string io = " --ref " + path("ref.csv") + " --tpl " + path("tpl.csv") + " --init 0,0,0,1";
    RunResult r = run("estimate" + io + " --out " + path("ml.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json ml = Json::parse(read_file(path("ml.json")));
    EXPECT_NEAR(ml["rst"]["dt"].get<double>(), 0.0, 1e-3);
    EXPECT_NEAR(ml["rst"]["ds"].get<double>(), 0.0, 1e-3);
    EXPECT_NEAR(ml["rst"]["alpha_deg"].get<double>(), 0.0, rad_to_deg(1e-3));
    EXPECT_NEAR(ml["rst"]["dr"].get<double>(), 1.0, 1e-3);
    EXPECT_TRUE(ml.contains("texture"));
    EXPECT_TRUE(ml.contains("starts"));

    r = run("estimate" + io + " --method ncc --out " + path("ncc.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json ncc = Json::parse(read_file(path("ncc.json")));
    EXPECT_FALSE(ncc.contains("texture"));
    EXPECT_FALSE(ncc.contains("sigma_rst"));
    EXPECT_TRUE(ncc.contains("score_at_opt"));
    EXPECT_NEAR(ncc["rst"]["dt"].get<double>(), 0.0, 1e-3);

    EXPECT_EQ(run("estimate" + io + " --method mi").exit_code, 2);
}

TEST_F(Cli, EstimateMlBoundNearReferenceValue) {
    ASSERT_EQ(run("simulate --test-point 1 --seed 11 --out-dir " + path("p")).exit_code, 0);
    const RunResult r = run("estimate --ref " + path("p/ref.csv") + " --tpl " + path("p/tpl.csv") +
                            " --init 0,0,17,1.025 --truth 0.25,0.25,17,1.025 --out " + path("e.json"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json j = Json::parse(read_file(path("e.json")));
    const std::array<std::pair<const char*, double>, 4> row1{
        {{"dt", 0.048}, {"ds", 0.049}, {"alpha_deg", 0.447}, {"dr", 0.008}}};
    for (const auto& [k, v] : row1) {
        EXPECT_NEAR(j["sigma_rst"][k].get<double>(), v, 0.2 * v) << k;
    }
    EXPECT_TRUE(j["q"].contains("q"));
    EXPECT_NEAR(j["q"]["threshold"].get<double>(), 33.3768, 1e-3);
}

TEST_F(Cli, ScreenPrintsReport) {
    ASSERT_EQ(run("simulate --test-point 1 --seed 2 --out-dir " + path("p")).exit_code, 0);
    const RunResult r = run("screen --ref " + path("p/ref.csv") + " --tpl " + path("p/tpl.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json j = Json::parse(r.out);
    EXPECT_TRUE(j.contains("group"));
    EXPECT_TRUE(j.contains("eigen_ratio"));
}

TEST_F(Cli, BenchEmptyCampaign) {
    write_file_atomic(path("empty.json"), R"({"test_points": [1], "estimators": ["ml"], "trials": 0})");
    const RunResult r = run("bench --config " + path("empty.json") + " --out " + path("rep"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Json j = Json::parse(read_file(path("rep.json")));
    EXPECT_TRUE(j["stats"].empty());
    EXPECT_EQ(j["records"].get<int>(), 0);
    const std::string csv = read_file(path("rep.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST_F(Cli, BenchIsDeterministic) {
    write_file_atomic(path("small.json"), R"({
        "targets": [{"name": "small", "n_ri": 9, "n_ti": 5, "params": {"sigma_x_ri": 5, "sigma_x_ti": 5,
                     "hurst": 0.65, "k_rt": 0.95, "dt": 0.25, "ds": 0.25, "alpha_deg": 17, "dr": 1.025}}],
        "estimators": ["ml", "ncc", "ssd"], "trials": 3})");
    EXPECT_EQ(run("bench --config " + path("small.json") + " --out " + path("x")).exit_code, 2);  // no seed
    ASSERT_EQ(run("bench --config " + path("small.json") + " --seed 42 --out " + path("a")).exit_code, 0);
    ASSERT_EQ(run("bench --config " + path("small.json") + " --seed 42 --out " + path("b")).exit_code, 0);
    EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
    EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
    const std::string csv = read_file(path("a.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
}

TEST_F(Cli, BenchRejectsUnknownConfigKeys) {
    write_file_atomic(path("bad.json"), R"({"test_points": [1], "trails": 3})");
    EXPECT_EQ(run("bench --config " + path("bad.json") + " --seed 1 --out " + path("r")).exit_code, 2);
}
