#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "contpol/data.hpp"
#include "contpol/errors.hpp"

namespace contpol {
namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

TEST(Csv, ParsesThreeRows) {
  const Dataset ds = parse_csv("y,t,x1\n1,0.1,3\n-2,0.5,4\n3,0.9,5\n", 1);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.d_x(), 1u);
  EXPECT_EQ(ds.m_bound(), 3.0);
  EXPECT_EQ(ds.t_lo(), 0.1);
  EXPECT_EQ(ds.t_hi(), 0.9);
  EXPECT_EQ(ds.x(1)[0], 4.0);
}

TEST(Csv, ValidationErrors) {
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0,1\n2,1,1\n", 1); }), Errc::ConstantCovariate);
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0,1\n2,1,2\n", 2); }), Errc::MissingColumn);
  EXPECT_EQ(code_of([] { parse_csv("y,x1,t\n1,0,1\n2,1,2\n", 1); }), Errc::MissingColumn);
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0\n2,1,2\n", 1); }), Errc::MissingColumn);
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0,1\n2,nan,2\n", 1); }), Errc::NonFiniteValue);
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0,1\n2,abc,2\n", 1); }), Errc::NonFiniteValue);
  EXPECT_EQ(code_of([] { parse_csv("y,t,x1\n1,0,1\n", 1); }), Errc::TooFewRows);
  EXPECT_EQ(code_of([] { load_csv("/nonexistent/file.csv", 1); }), Errc::IoError);
}

TEST(Csv, RoundTripAndRepeatedLoads) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> y(30), t(30), x(60);
  for (double& v : y) v = g(rng);
  for (double& v : t) v = g(rng);
  for (double& v : x) v = 100.0 * g(rng);
  const Dataset ds(y, t, x, 2);
  const auto path = std::filesystem::temp_directory_path() / "contpol_roundtrip.csv";
  {
    std::ofstream f(path);
    f << to_csv(ds);
  }
  const std::string before = [&] {
    std::ifstream f(path);
    return std::string(std::istreambuf_iterator<char>(f), {});
  }();
  const Dataset a = load_csv(path.string(), 2), b = load_csv(path.string(), 2);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a.y()[i], y[i]);
    EXPECT_EQ(a.t()[i], t[i]);
    EXPECT_EQ(a.x(i)[0], x[2 * i]);
    EXPECT_EQ(a.x(i)[1], b.x(i)[1]);
  }
  std::ifstream f(path);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f), {}), before);
  std::filesystem::remove(path);
}

TEST(Rescale, MapsColumnsToUnitInterval) {
  const Dataset ds({1, 2, 3}, {0, 1, 2}, {0, 2, 5, 4, 10, 3}, 2);
  const Dataset s = rescale_covariates(ds);
  EXPECT_TRUE(s.rescaled());
  EXPECT_DOUBLE_EQ(s.x(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(s.x(1)[0], 0.5);
  EXPECT_DOUBLE_EQ(s.x(2)[0], 1.0);
  EXPECT_DOUBLE_EQ(s.x(0)[1], 0.0);
  EXPECT_DOUBLE_EQ(s.x(1)[1], 1.0);
  EXPECT_DOUBLE_EQ(s.x(2)[1], 0.5);
  // Treatment is not rescaled.
  EXPECT_EQ(s.t()[2], 2.0);
  const Dataset two = rescale_covariates(Dataset({0, 0}, {0, 1}, {2, 4}, 1));
  EXPECT_EQ(two.x(0)[0], 0.0);
  EXPECT_EQ(two.x(1)[0], 1.0);
}

TEST(Rescale, IdempotentAndInvertible) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-50.0, 300.0);
  std::vector<double> x(3 * 100), y(100, 1.0), t(100);
  for (double& v : x) v = u(rng);
  for (double& v : t) v = u(rng);
  const Dataset ds(y, t, x, 3);
  const Dataset s = rescale_covariates(ds);
  const Dataset s2 = rescale_covariates(s);
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_GE(s.x(i)[p], 0.0);
      EXPECT_LE(s.x(i)[p], 1.0);
      EXPECT_EQ(s2.x(i)[p], s.x(i)[p]);
      const CovariateScale& c = s.x_scale()[p];
      const double back = c.lo + s.x(i)[p] * (c.hi - c.lo);
      EXPECT_NEAR(back, x[3 * i + p], 1e-12 * std::fabs(x[3 * i + p]) + 1e-12);
      EXPECT_NEAR(s.raw_x(i)[p], x[3 * i + p], 1e-12 * std::fabs(x[3 * i + p]));
    }
  const auto mapped = apply_scale(ds.x(7), s.x_scale());
  for (std::size_t p = 0; p < 3; ++p) EXPECT_DOUBLE_EQ(mapped[p], s.x(7)[p]);
}

TEST(Dataset, ConstructionChecks) {
  EXPECT_EQ(code_of([] { Dataset({1, 2}, {1}, {1, 2}, 1); }), Errc::DimensionMismatch);
  EXPECT_EQ(code_of([] { Dataset({1, INFINITY}, {0, 1}, {1, 2}, 1); }), Errc::NonFiniteValue);
  EXPECT_EQ(code_of([] { rescale_covariates(Dataset({1, 2}, {0, 1}, {3, 3}, 1)); }),
            Errc::ConstantCovariate);
  const Dataset ds({1, -4, 2}, {0.2, 0.5, 0.1}, {1, 2, 3}, 1);
  EXPECT_EQ(ds.m_bound(), 4.0);
  const std::vector<std::size_t> rows{2, 0};
  const Dataset sub = ds.subset(rows);
  EXPECT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.y()[0], 2.0);
  EXPECT_EQ(sub.t_lo(), 0.1);
  EXPECT_EQ(sub.t_hi(), 0.2);
}

}  // namespace
}  // namespace contpol
