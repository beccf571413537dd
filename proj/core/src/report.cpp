#include "contpol/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "contpol/errors.hpp"
#include "contpol/version.hpp"

namespace contpol {

namespace {

using json = nlohmann::ordered_json;

json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json policy_json(const FittedPolicy& p) {
  json scale = json::array();
  for (const auto& s : p.x_scale) scale.push_back({s.lo, s.hi});
  return {{"family", "monotone_separable"},
          {"d_x", p.family.d_x()},
          {"k", p.family.k()},
          {"theta", p.params.theta},
          {"x_scale", scale},
          {"out_lo", bound(p.family.out_lo())},
          {"out_hi", bound(p.family.out_hi())}};
}

json score_json(double h, std::size_t k, const PenalizedScore& s) {
  return {{"h", h},
          {"k", k},
          {"welfare", s.welfare},
          {"rad_penalty", s.rad_penalty},
          {"tau", s.tau},
          {"bias_penalty", s.bias_penalty},
          {"q", s.q}};
}

json config_json(const FitConfig& cfg, const ConfigEcho& echo) {
  const auto& s = cfg.selection;
  json c;
  for (const auto& [k, v] : echo) c[k] = v;
  c["penalty"] = to_string(s.penalty);
  c["estimator"] = to_string(s.estimator);
  c["grid"] = to_string(cfg.grid);
  c["rho"] = cfg.rho;
  c["k_min"] = s.k_min;
  c["k_max"] = s.k_max;
  c["folds"] = s.folds;
  c["draws"] = s.draws;
  c["gamma"] = cfg.known_bias ? cfg.known_bias->gamma : cfg.bias.gamma;
  c["iota"] = s.iota;
  c["seed"] = s.seed;
  c["r_max"] = cfg.bias.r_max;
  c["optimizer"] = {{"n_starts", s.optimizer.n_starts},
                    {"max_iters", s.optimizer.max_iters},
                    {"tol", s.optimizer.tol}};
  c["rademacher_optimizer"] = {{"n_starts", s.rademacher_optimizer.n_starts},
                               {"max_iters", s.rademacher_optimizer.max_iters},
                               {"tol", s.rademacher_optimizer.tol}};
  c["version"] = kVersion;
  return c;
}

double number_or(const json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

}  // namespace

std::string policy_to_json(const FittedPolicy& policy) { return policy_json(policy).dump(2) + "\n"; }

FittedPolicy policy_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("family").get<std::string>() != "monotone_separable")
      throw Error(Errc::InvalidArgument, "unknown policy family");
    const auto d = j.at("d_x").get<std::size_t>();
    const auto k = j.at("k").get<std::size_t>();
    const double inf = std::numeric_limits<double>::infinity();
    MonotoneSeparableFamily fam(d, k, number_or(j.at("out_lo"), -inf),
                                number_or(j.at("out_hi"), inf));
    PolicyParams params{j.at("theta").get<std::vector<double>>()};
    if (params.theta.size() != fam.dim())
      throw Error(Errc::DimensionMismatch, "theta has the wrong length");
    std::vector<CovariateScale> scale;
    for (const auto& s : j.at("x_scale")) scale.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    if (scale.size() != d) throw Error(Errc::DimensionMismatch, "x_scale has the wrong length");
    return {fam, std::move(params), std::move(scale)};
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("malformed policy json: ") + e.what());
  }
}

std::string fit_report_json(const FitReport& report, const FitConfig& cfg,
                            const ConfigEcho& echo) {
  json table = json::array();
  for (const auto& row : report.selection.table) table.push_back(score_json(row.h, row.k, row.score));
  json diag = {{"r_hat", report.bias.r_hat},
               {"V_hat", report.bias.V_hat},
               {"gamma", report.bias.gamma},
               {"bias_estimated", report.bias.estimated},
               {"all_values_zero", report.bias.all_values_zero},
               {"grid", report.grid.h},
               {"h_min", report.grid.h_min},
               {"n_used", report.selection.n_used}};
  json out = {{"config", config_json(cfg, echo)},
              {"selection_table", table},
              {"chosen", score_json(report.selection.h_hat, report.selection.k_hat,
                                    report.selection.chosen)},
              {"policy", policy_json(report.policy)},
              {"diagnostics", diag}};
  return out.dump(2) + "\n";
}

std::string bias_report_json(const BiasBoundFit& fit, const MuFtCurve& curve,
                             const BandwidthGrid& grid, const ConfigEcho& echo) {
  json cfg;
  for (const auto& [k, v] : echo) cfg[k] = v;
  cfg["version"] = kVersion;
  json per_h = json::array();
  for (double h : grid.h) per_h.push_back({{"h", h}, {"B", bias_bound(h, fit.r_hat, fit.V_hat)}});
  json out = {{"config", cfg},
              {"r_hat", fit.r_hat},
              {"V_hat", fit.V_hat},
              {"gamma", fit.gamma},
              {"all_values_zero", fit.all_values_zero},
              {"curve",
               {{"xi", curve.xi},
                {"magnitude", curve.magnitude},
                {"noise_se", curve.noise_se},
                {"full_grid", curve.full_grid}}},
              {"bias", per_h}};
  return out.dump(2) + "\n";
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error(Errc::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::IoError, "cannot move report into " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace contpol
