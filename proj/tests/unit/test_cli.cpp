#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "contpol/errors.hpp"
#include "contpol/report.hpp"
#include "contpol/simulation.hpp"
#include "contpol/version.hpp"

namespace contpol {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "contpol");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("contpol_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    data_ = (dir_ / "d.csv").string();
    std::ofstream(data_) << to_csv(generate(smooth_quadratic_dgp(), 300, 4).data);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string slurp(const std::string& p) { return read_file(p); }

  fs::path dir_;
  std::string data_;
};

void expect_json_error(const CliRun& r, int code) {
  EXPECT_EQ(r.code, code);
  ASSERT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_TRUE(j.contains("error"));
  EXPECT_TRUE(j.contains("message"));
}

TEST_F(CliTest, MissingSeedIsConfigError) {
  expect_json_error(run({"fit", "--data", data_, "--dx", "1"}), 2);
}

TEST_F(CliTest, BadChoiceIsConfigError) {
  expect_json_error(run({"fit", "--data", data_, "--dx", "1", "--seed", "1", "--penalty", "lasso"}), 2);
}

TEST_F(CliTest, MissingFileIsIoError) {
  expect_json_error(run({"fit", "--data", path("nope.csv"), "--dx", "1", "--seed", "1"}), 3);
}

TEST_F(CliTest, SchemaMismatchIsValidationError) {
  const CliRun r = run({"fit", "--data", data_, "--dx", "2", "--seed", "1"});
  expect_json_error(r, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "MissingColumn");
}

TEST_F(CliTest, VersionFlag) {
  const CliRun r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, std::string("contpol ") + kVersion + "\n");
}

TEST_F(CliTest, FitReportIsStableAcrossThreads) {
  const std::vector<std::string> common{"fit", "--data", data_, "--dx", "1", "--seed", "7", "--kmax", "3",
                                        "--draws", "4", "--starts", "4", "--rad-starts", "2"};
  auto one = common, eight = common;
  one.insert(one.end(), {"--threads", "1", "--out", path("r1.json")});
  eight.insert(eight.end(), {"--threads", "8", "--out", path("r8.json")});
  ASSERT_EQ(run(one).code, 0);
  ASSERT_EQ(run(eight).code, 0);
  const std::string a = slurp(path("r1.json")), b = slurp(path("r8.json"));
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  for (const char* key : {"config", "selection_table", "chosen", "policy", "diagnostics"}) EXPECT_TRUE(j.contains(key));
  EXPECT_EQ(j["config"]["version"], kVersion);
  EXPECT_EQ(j["config"]["seed"], 7);
  EXPECT_FALSE(fs::exists(path("r1.json.tmp")));
}

TEST_F(CliTest, IpwWithUniformPropensity) {
  const CliRun r = run({"fit", "--data", data_, "--dx", "1", "--seed", "2", "--estimator", "ipw", "--propensity", "uniform",
                     "--penalty", "holdout", "--kmax", "2", "--starts", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["config"]["estimator"], "ipw");
  EXPECT_EQ(j["config"]["penalty"], "holdout");
}

TEST_F(CliTest, EvaluateAppliesSavedPolicy) {
  ASSERT_EQ(run({"fit", "--data", data_, "--dx", "1", "--seed", "3", "--kmax", "2", "--draws", "3", "--starts", "2",
                 "--out", path("r.json")})
                .code,
            0);
  const auto report = nlohmann::json::parse(slurp(path("r.json")));
  std::ofstream(path("p.json")) << report["policy"].dump();
  for (const std::string& policy : {path("p.json"), path("r.json")}) {
    const CliRun r = run({"evaluate", "--policy", policy, "--data", data_});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["predictions"].size(), 300u);
    double sum = 0.0;
    for (double v : j["predictions"]) sum += v;
    EXPECT_NEAR(j["mean_treatment"].get<double>(), sum / 300.0, 1e-12);
  }
}

TEST_F(CliTest, BiasboundReport) {
  const CliRun r = run({"biasbound", "--data", data_, "--dx", "1", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j["r_hat"].get<int>(), 1);
  EXPECT_GE(j["V_hat"].get<double>(), 0.0);
  EXPECT_EQ(j["gamma"].get<double>(), 0.1);
}

TEST_F(CliTest, SimulateWritesCsv) {
  const CliRun r = run({"simulate", "--dgp", "tent", "--n", "200,300", "--reps", "1", "--seed", "1", "--kmax", "2",
                     "--draws", "2", "--starts", "2", "--rad-starts", "1", "--out", path("sim.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(path("sim.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n,rep,penalty,estimator,h_hat,k_hat,welfare_hat,true_welfare,oracle_welfare,regret");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  expect_json_error(run({"simulate", "--dgp", "nope", "--seed", "1"}), 2);
}

TEST(Report, PolicyJsonRoundTrip) {
  FittedPolicy p;
  p.family = MonotoneSeparableFamily(2, 3);
  p.params.theta = {0.1, 0.2, 0.3, 0.4, -1.0, 0.0, 0.5, 1.0 / 3.0};
  p.x_scale = {{0.0, 2.0}, {-5.0, 5.0}};
  const std::string text = policy_to_json(p);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["family"], "monotone_separable");
  EXPECT_TRUE(j["out_lo"].is_null());
  const FittedPolicy q = policy_from_json(text);
  EXPECT_EQ(q.params.theta, p.params.theta);
  EXPECT_EQ(q.family.k(), 3u);
  EXPECT_EQ(q.family.d_x(), 2u);
  EXPECT_TRUE(std::isinf(q.family.out_hi()));
  EXPECT_EQ(q.x_scale[1].lo, -5.0);
  EXPECT_EQ(policy_to_json(q), text);
  EXPECT_THROW(policy_from_json("{\"k\": 1}"), Error);
}

}  // namespace
}  // namespace contpol
