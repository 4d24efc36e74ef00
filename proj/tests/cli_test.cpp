#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pmcmono/cli.hpp"
#include "support.hpp"

using namespace pmcmono;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string model(const char* name) { return std::string(PMCMONO_MODELS_DIR) + "/" + name; }

std::filesystem::path scratch(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "pmcmono_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string write_scratch(const char* name, const std::string& text) {
    auto path = scratch(name);
    std::ofstream(path) << text;
    return path.string();
}

} // namespace

TEST(Cli, CheckMonotoneModel) {
    auto r = run({"check", model("m2.pmc"), "--region", "p in [0.1,0.9]"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["monotonicity"]["p"], "increasing");
    EXPECT_EQ(j["orders"], 1);
    EXPECT_EQ(j["assumptions"]["in_orders"], 0);
    EXPECT_FALSE(j.contains("timings"));
}

TEST(Cli, Deterministic) {
    std::vector<std::string> args{"check", model("two_param.pmc"), "--region", "p in (0.5,0.8); q in (0.1,0.3)", "--jobs", "3"};
    auto a = run(args);
    auto b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, Timings) {
    auto r = run({"check", model("m1.pmc"), "--region", "p in [0.1,0.9]", "--timings"});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(r.out).contains("timings"));
}

TEST(Cli, BadRowSumsExitTwo) {
    auto path = write_scratch("bad.pmc", "params: p\nstates: 1\ninitial: 0\ntarget: top\ntrans: 0 -> top : p\n");
    auto r = run({"check", path, "--region", "p in [0.1,0.9]"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, ParseErrorReportsLine) {
    auto path = write_scratch("syntax.pmc", "params: p\nstates: 1\ninitial: 0\ntarget: top\ntrans: 0 -> top : p +\n");
    auto r = run({"solution", path});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("5"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"check", model("m2.pmc")}).code, 1);
    EXPECT_EQ(run({"check", model("m2.pmc"), "--region", "p in [0.1,0.9]", "--discharge", "magic"}).code, 1);
    EXPECT_EQ(run({"check", model("m2.pmc"), "--region", "p in [0.1,0.9]", "--max-orders", "0"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, BudgetExitThree) {
    auto r = run({"check", model("m3.pmc"), "--region", "p in [0.1,0.9]", "--discharge", "off", "--max-orders", "1"});
    EXPECT_EQ(r.code, 3);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["budget_exceeded"]);
    EXPECT_EQ(j["monotonicity"]["p"], "unknown");
}

TEST(Cli, ThirdModelBranches) {
    auto off = run({"check", model("m3.pmc"), "--region", "p in [0.1,0.9]", "--discharge", "off"});
    ASSERT_EQ(off.code, 0);
    auto j = nlohmann::json::parse(off.out);
    EXPECT_EQ(j["orders"], 3);
    EXPECT_EQ(j["monotonicity"]["p"], "unknown");
}

TEST(Cli, Solution) {
    auto r = run({"solution", model("m1.pmc")});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "p^2 - p + 1\n");
}

TEST(Cli, EliminateRandomWalk) {
    auto r = run({"eliminate", model("m4.pmc")});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("0 -> top : p^3 / (2*p^2 - 2*p + 1)"), std::string::npos);
    // the output is itself a model file
    EXPECT_NO_THROW(validate(parse_model(r.out)));
}

TEST(Cli, SampleCsv) {
    auto r = run({"sample", model("m1.pmc"), "--region", "p in [0.1,0.9]", "--grid", "3"});
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header.substr(0, 2), "p,");
    // first interior point is 3/10 where sol = 79/100
    EXPECT_EQ(first.substr(0, first.find(',', first.find(',') + 1)), "3/10,79/100");
}

TEST(Cli, PartitionCsv) {
    auto r = run({"partition", model("m2.pmc"), "--region", "p in [0.1,0.9]", "--threshold", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "region;verdict;calls_so_far;coverage_so_far");
    EXPECT_NE(r.err.find("coverage"), std::string::npos);
    EXPECT_EQ(run({"partition", model("m2.pmc"), "--region", "p in [0.1,0.9]", "--threshold", "0.5", "--method", "nope"}).code, 1);
    EXPECT_EQ(run({"partition", model("m2.pmc"), "--region", "p in [0.1,0.9]", "--threshold", "1.5"}).code, 1);
}

TEST(Cli, ExportSmtToFile) {
    auto path = scratch("two_param.smt2");
    auto r = run({"export-smt", model("two_param.pmc"), "--region", "p in (0.5,0.8); q in (0.1,0.3)", "--assume", "2 < 3", "--depth", "1",
                  "-o", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(testing_support::read_text(path.string()),
              testing_support::read_text(std::string(PMCMONO_TEST_DATA_DIR) + "/two_param_s2_lt_s3_depth1.smt2"));
}

TEST(Cli, DotExport) {
    auto path = scratch("m1.dot");
    auto r = run({"check", model("m1.pmc"), "--region", "p in [0.1,0.9]", "--dot", path.string()});
    ASSERT_EQ(r.code, 0);
    std::string dot = testing_support::read_text(path.string());
    EXPECT_NE(dot.find("digraph"), std::string::npos);
    EXPECT_NE(dot.find("{s0, s1}"), std::string::npos);
}

TEST(Cli, SmtDischargeWritesFiles) {
    auto dir = scratch("smt");
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto r = run({"check", model("two_param.pmc"), "--region", "p in (0.5,0.8); q in (0.3,0.5)", "--discharge", "sampling+bounds+smt-export",
                  "--smt-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    ASSERT_TRUE(j.contains("smt_files"));
    EXPECT_FALSE(j["smt_files"].empty());
    for (const auto& f : j["smt_files"]) EXPECT_TRUE(std::filesystem::exists(f.get<std::string>()));
}
