#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("isinglsi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string model(const std::string& name, const std::string& body) {
    const auto path = dir_ / (name + ".json");
    std::ofstream(path) << body;
    return path.string();
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), "isinglsi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return isinglsi::cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  json read(const fs::path& path) {
    std::ifstream in(path);
    return json::parse(in);
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-300, 6.02214076e23}) {
    const auto s = isinglsi::cli::format_double(v);
    EXPECT_EQ(std::stod(s), v);
  }
  EXPECT_EQ(isinglsi::cli::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(isinglsi::cli::format_json(json{{"x", std::nan("")}}), "{\n  \"x\": null\n}\n");
}

TEST_F(CliTest, CorollaryExample) {
  EXPECT_EQ(run({"corollary", "--D", "1", "--beta-c", "1", "--beta", "0.5", "--out", dir_.string()}), 0);
  EXPECT_EQ(std::stod(out_.str()), 1.5);
  EXPECT_DOUBLE_EQ(read(dir_ / "corollary.json")["value"].get<double>(), 1.5);
}

TEST_F(CliTest, BoundAtZeroBetaIsOneHalf) {
  const auto path = model("path4", R"({"kind":"path","params":{"n":4}})");
  EXPECT_EQ(run({"bound", "--model", path, "--beta", "0", "--out", dir_.string()}), 0) << err_.str();
  const auto j = read(dir_ / "bound.json");
  EXPECT_EQ(j["bound_upper"].get<double>(), 0.5);
  EXPECT_EQ(j["bound_lower"].get<double>(), 0.5);
  EXPECT_EQ(j["model"], "path-4");
  EXPECT_TRUE(fs::exists(dir_ / "traces" / "chi_grid.csv"));
}

TEST_F(CliTest, BoundReportsAreByteIdentical) {
  const auto path = model("cycle4", R"({"kind":"cycle","params":{"n":4},"beta":0.6})");
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run({"bound", "--model", path, "--out", a.string()}), 0);
  ASSERT_EQ(run({"bound", "--model", path, "--out", b.string(), "--threads", "1"}), 0);
  EXPECT_EQ(slurp(a / "bound.json"), slurp(b / "bound.json"));
  EXPECT_EQ(slurp(a / "traces" / "chi_grid.csv"), slurp(b / "traces" / "chi_grid.csv"));
  const auto j = read(a / "bound.json");
  EXPECT_LE(j["bound_upper"].get<double>(), j["coarse_bound"].get<double>() + 1e-9);
  EXPECT_EQ(j["grid"].size(), 257u);
}

TEST_F(CliTest, TheoremExample) {
  const auto path = model("cycle3", R"({"kind":"cycle","params":{"n":3}})");
  EXPECT_EQ(run({"verify", "theorem", "--model", path, "--beta", "0.2", "--seed", "7", "--fields", "3", "--out",
                 dir_.string()}),
            0)
      << err_.str();
  const auto j = read(dir_ / "verify_theorem.json");
  EXPECT_EQ(j["violations"], 0);
  EXPECT_EQ(j["cases"].size(), 4u);
}

TEST_F(CliTest, LsiIsReproducible) {
  const auto path = model("path3", R"({"kind":"path","params":{"n":3},"beta":0.7,"h":0.2})");
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run({"lsi", "--model", path, "--seed", "3", "--restarts", "2", "--out", a.string()}), 0);
  ASSERT_EQ(run({"lsi", "--model", path, "--seed", "3", "--restarts", "2", "--out", b.string()}), 0);
  EXPECT_EQ(slurp(a / "lsi.json"), slurp(b / "lsi.json"));
  EXPECT_TRUE(fs::exists(a / "traces" / "lsi_trajectories.csv"));
}

TEST_F(CliTest, ExactGapAndDecay) {
  const auto path = model("two", R"({"kind":"path","params":{"n":2},"beta":0.8})");
  ASSERT_EQ(run({"exact", "--model", path, "--out", dir_.string()}), 0);
  const auto ex = read(dir_ / "exact.json");
  // A = [[0.6,-0.4],[-0.4,0.6]]: Z = 2 e^{-0.48} (e^{0.32} + e^{-0.32})
  EXPECT_NEAR(ex["log_partition"].get<double>(), std::log(2.0 * std::exp(-0.48) * 2.0 * std::cosh(0.32)), 1e-13);
  EXPECT_NEAR(ex["chi"].get<double>(), 1.0 + std::tanh(0.32), 1e-13);

  ASSERT_EQ(run({"gap", "--model", path, "--out", dir_.string()}), 0);
  EXPECT_EQ(read(dir_ / "gap.json")["method"], "dense");

  ASSERT_EQ(run({"decay", "--model", path, "--times", "0,0.5,1", "--out", dir_.string()}), 0) << err_.str();
  const auto d = read(dir_ / "decay.json");
  EXPECT_EQ(d["entropy"].size(), 3u);
  EXPECT_GE(d["worst_envelope_slack"].get<double>(), -1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "traces" / "decay.csv"));
}

TEST_F(CliTest, VerifyBatteries) {
  const auto path = model("cycle3", R"({"kind":"cycle","params":{"n":3},"beta":0.9})");
  for (const std::string kind : {"fkg", "monotone", "pf", "decomposition", "entropy-decomp", "criterion"}) {
    EXPECT_EQ(run({"verify", kind, "--model", path, "--count", kind == "criterion" ? "100" : "20", "--out",
                   dir_.string()}),
              0)
        << kind << ": " << err_.str();
    EXPECT_EQ(read(dir_ / ("verify_" + kind + ".json"))["violations"], 0) << kind;
  }
}

TEST_F(CliTest, McmcAndReport) {
  const auto path = model("grid", R"({"kind":"grid2d","params":{"width":3,"height":3},"beta":0.2})");
  const int code = run({"mcmc", "--model", path, "--sweeps", "4000", "--burn-in", "200", "--out", dir_.string()});
  EXPECT_TRUE(code == 0 || code == 3);
  EXPECT_TRUE(fs::exists(dir_ / "mcmc.json"));
  ASSERT_EQ(run({"mcmc", "--sizes", "3", "--betas", "0.1,0.2", "--D", "1", "--beta-c", "0.5", "--sweeps", "2000",
                 "--burn-in", "100", "--out", (dir_ / "scaling").string()}) % 3,
            0);
  EXPECT_TRUE(fs::exists(dir_ / "scaling" / "traces" / "scaling.csv"));

  ASSERT_EQ(run({"corollary", "--D", "1", "--beta-c", "1", "--beta", "0.5", "--out", dir_.string()}), 0);
  ASSERT_EQ(run({"report", "--out", dir_.string()}), 0);
  const auto rep = read(dir_ / "report.json");
  EXPECT_TRUE(rep["reports"].contains("mcmc"));
  EXPECT_TRUE(rep["reports"].contains("corollary"));
}

TEST_F(CliTest, InvalidInputExitsWithOne) {
  EXPECT_EQ(run({"bound", "--model", (dir_ / "missing.json").string(), "--out", dir_.string()}), 1);
  EXPECT_EQ(run({"bound", "--model", model("bad", "{not json"), "--out", dir_.string()}), 1);
  EXPECT_EQ(run({"bound", "--model", model("cyc", R"({"kind":"cycle","params":{"n":2}})"), "--out", dir_.string()}),
            1);
  EXPECT_EQ(run({"bound", "--model", model("p", R"({"kind":"path","params":{"n":2}})"), "--beta", "1", "--alpha",
                 "0.5", "--out", dir_.string()}),
            1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"verify", "nonsense"}), 1);
  EXPECT_EQ(run({"corollary", "--D", "1", "--beta-c", "1", "--beta", "2", "--out", dir_.string()}), 1);
  EXPECT_EQ(run({"report", "--out", (dir_ / "empty").string()}), 1);
}

TEST_F(CliTest, ViolationExitsWithTwo) {
  // a negative tolerance demands strictly positive slack, which the zero-field spike samples cannot give
  const auto path = model("path3", R"({"kind":"path","params":{"n":3},"beta":0.5})");
  EXPECT_EQ(run({"verify", "fkg", "--model", path, "--count", "20", "--tol", "-1", "--out", dir_.string()}), 2);
  EXPECT_GT(read(dir_ / "verify_fkg.json")["violations"].get<int>(), 0);
}

TEST_F(CliTest, NonconvergenceExitsWithThree) {
  const auto path = model("path3", R"({"kind":"path","params":{"n":3},"beta":0.5})");
  EXPECT_EQ(run({"bound", "--model", path, "--grid", "4", "--max-grid", "16", "--tol", "1e-12", "--out",
                 dir_.string()}),
            3);
  const auto j = read(dir_ / "bound.json");
  EXPECT_FALSE(j["tolerance_reached"].get<bool>());
  EXPECT_EQ(j["flags"][0], "tolerance_unreached");
}
