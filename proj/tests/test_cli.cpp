#include <affinecf/cli.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace affinecf;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "affine-cf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::runCli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string model(const char* name) { return std::string(AFFINECF_MODELS_DIR) + "/" + name + ".json"; }

std::vector<std::string> dataLines(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    return rows;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, ',');) v.push_back(f);
    return v;
}

}  // namespace

TEST(Cli, GridParsing) {
    EXPECT_EQ(cli::parseAxis("2.5", "t"), std::vector<double>({2.5}));
    EXPECT_EQ(cli::parseAxis("0:1:3", "t"), std::vector<double>({0.0, 0.5, 1.0}));
    EXPECT_THROW(cli::parseAxis("0:1", "t"), ModelError);
    EXPECT_THROW(cli::parseAxis("0:1:0", "t"), ModelError);
    EXPECT_THROW(cli::parseAxis("a", "t"), ModelError);
    auto g = cli::parseGrid("0:1:2,5", 2, "u");
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[1](0), 1.0);
    EXPECT_EQ(g[1](1), 5.0);
    EXPECT_EQ(cli::parseGrid("1:2:2", 2, "u").size(), 4u);
    EXPECT_THROW(cli::parseGrid("1,2,3", 2, "u"), ModelError);
}

TEST(Cli, EvalSingleBrownianRow) {
    auto r = run({"eval", "--model", model("bm"), "--t", "0.5", "--u", "1", "--x", "0", "--k", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("# affine-cf v1\n", 0), 0u);
    auto rows = dataLines(r.out);
    ASSERT_EQ(rows.size(), 2u);  // header + one row
    EXPECT_EQ(rows[0], "t,x1,u1,re,im,tail,K,status");
    auto f = split(rows[1]);
    EXPECT_NEAR(std::stod(f[3]), std::exp(-0.25), 1e-13);
    EXPECT_NEAR(std::stod(f[4]), 0.0, 1e-15);
    EXPECT_EQ(f[6], "20");
    EXPECT_EQ(f[7], "ok");
}

TEST(Cli, ZeroFrequencyRowIsOne) {
    auto r = run({"eval", "--model", model("vasicek"), "--t", "0.5", "--u", "-1:1:3", "--x", "0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    auto f = split(rows[2]);
    EXPECT_EQ(f[2], "0.0000000000000000e+00");
    EXPECT_EQ(f[3], "1.0000000000000000e+00");
    EXPECT_EQ(f[4], "0.0000000000000000e+00");
}

TEST(Cli, RowCountAndOrder) {
    auto r = run({"eval", "--model", model("vasicek"), "--t", "0.05:0.5:10", "--u", "-2:2:50", "--x", "0.1", "--k", "8", "--jobs", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    ASSERT_EQ(rows.size(), 501u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto f = split(rows[i]);
        EXPECT_NE(f[5], "nan");
        EXPECT_NEAR(std::stod(f[0]), 0.05 + 0.05 * static_cast<double>((i - 1) / 50), 1e-14) << i;
    }
}

TEST(Cli, DeterministicAcrossJobCounts) {
    std::vector<std::string> base{"compare", "--model", model("heston"), "--t", "0.2:1:3", "--u", "0,-2:2:5", "--x", "0.04,0", "--no-timings"};
    auto a = base, b = base;
    a.insert(a.end(), {"--jobs", "1"});
    b.insert(b.end(), {"--jobs", "4"});
    auto ra = run(a), rb = run(b);
    ASSERT_EQ(ra.code, 0) << ra.err;
    EXPECT_EQ(ra.out, rb.out);
}

TEST(Cli, CompareLevyWithinTolerance) {
    auto r = run({"compare", "--model", model("gauss_jump"), "--t", "0.1:1:3", "--u", "-3:3:21", "--k", "20", "--format", "json", "--no-timings"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["oracle"], "levy");
    EXPECT_LE(j["summary"]["max_rel_err"].get<double>(), 1e-10);
    EXPECT_FALSE(j["summary"].contains("series_seconds"));
}

TEST(Cli, CompareReportsTimingsByDefault) {
    auto r = run({"compare", "--model", model("bm"), "--t", "0.5", "--u", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("series_seconds="), std::string::npos);
}

TEST(Cli, CompareGeneralizedHeston) {
    auto r = run({"compare", "--model", model("heston"), "--mode", "generalized", "--baseline", "heston", "--t", "0.5:2:4", "--u", "0,-3:3:7",
                  "--x", "0.04,0", "--format", "json", "--no-timings"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["oracle"], "heston");
    EXPECT_LE(j["summary"]["max_abs_err"].get<double>(), 1e-10);
}

TEST(Cli, InapplicableOracleIsReported) {
    auto r = run({"compare", "--model", model("cir"), "--oracle", "heston", "--t", "0.5", "--u", "1", "--x", "0.1", "--no-timings"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    EXPECT_NE(rows[1].find("nan"), std::string::npos);
    EXPECT_NE(r.out.find("status=no oracle"), std::string::npos);
}

TEST(Cli, PerRowCapabilityErrors) {
    // the heston baseline only admits frequencies with u_v = 0: rows with u_v != 0 fail individually
    auto r = run({"eval", "--model", model("heston"), "--mode", "generalized", "--baseline", "heston", "--t", "0.5", "--u", "0:1:2,1",
                  "--x", "0.04,0"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_NE(rows[1].find(",ok"), std::string::npos);
    EXPECT_NE(rows[2].find("nan,nan"), std::string::npos);
    EXPECT_NE(rows[2].find("domain:"), std::string::npos);
}

TEST(Cli, Tables) {
    auto r = run({"tables", "--k", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    ASSERT_EQ(rows.size(), 1u + 1 + 2 + 4);
    EXPECT_EQ(rows[1], "1,(1),(0),1,1");
    auto j = nlohmann::json::parse(run({"tables", "--k", "2", "--format", "json"}).out);
    EXPECT_EQ(j["rows"][1]["entries"].size(), 2u);
    EXPECT_EQ(j["rows"][1]["entries"][0]["value"], "1/2");
    EXPECT_NE(run({"tables", "--k", "21"}).code, 0);
}

TEST(Cli, Triangle) {
    auto r = run({"triangle", "--k", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = dataLines(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[3], "3,1 3 2,6,1.0000000000000000e+00,true");
}

TEST(Cli, StructuredErrors) {
    auto r = run({"eval", "--model", "/nonexistent/model.json", "--t", "1", "--u", "1"});
    EXPECT_NE(r.code, 0);
    auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"]["kind"], "model");

    const auto tmp = std::filesystem::temp_directory_path() / "affinecf_bad_model.json";
    std::ofstream(tmp) << R"({"dimension": 1, "a0": [[1, 2]]})";
    r = run({"eval", "--model", tmp.string(), "--t", "1", "--u", "1"});
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"]["path"], "a0[0]");
    std::filesystem::remove(tmp);

    r = run({"eval", "--model", model("bm"), "--t", "1", "--u", "1", "--mode", "sideways"});
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"]["path"], "--mode");

    r = run({"frobnicate"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"]["kind"], "usage");
}

TEST(Cli, WritesOutputFile) {
    const auto tmp = std::filesystem::temp_directory_path() / "affinecf_out.csv";
    auto r = run({"eval", "--model", model("bm"), "--t", "1", "--u", "1", "--out", tmp.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(tmp);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# affine-cf v1");
    std::filesystem::remove(tmp);
}
