#include "cli.hpp"

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "contpol/bias_bound.hpp"
#include "contpol/data.hpp"
#include "contpol/errors.hpp"
#include "contpol/numerics.hpp"
#include "contpol/parallel.hpp"
#include "contpol/report.hpp"
#include "contpol/selection.hpp"
#include "contpol/simulation.hpp"
#include "contpol/version.hpp"

namespace contpol::cli {

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::IoError: return 3;
    case Errc::NumericalFailure: return 4;
    default: return 2;
  }
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  nlohmann::json j = {{"error", code}, {"message", message}};
  err << j.dump() << '\n';
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_atomic(path, content);
}

struct FitOptions {
  std::string data;
  std::size_t dx = 1;
  std::string penalty = "rademacher";
  std::string estimator = "dd";
  std::string grid = "exp";
  std::string propensity = "estimated";
  double rho = 2.0;
  std::size_t kmin = 1;
  std::size_t kmax = 8;
  std::size_t folds = 2;
  std::size_t draws = 100;
  double gamma = 0.1;
  double iota = 0.2;
  std::size_t rmax = 4;
  std::size_t starts = 16;
  std::size_t rad_starts = 4;
  std::uint64_t seed = 0;
  std::string out;
};

void add_selection_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--penalty", o.penalty, "rademacher | holdout")
      ->check(CLI::IsMember({"rademacher", "holdout"}));
  cmd->add_option("--estimator", o.estimator, "ipw | dd")->check(CLI::IsMember({"ipw", "dd"}));
  cmd->add_option("--grid", o.grid, "exp | geo")->check(CLI::IsMember({"exp", "geo"}));
  cmd->add_option("--rho", o.rho, "grid rate");
  cmd->add_option("--kmin", o.kmin, "smallest sieve order");
  cmd->add_option("--kmax", o.kmax, "largest sieve order");
  cmd->add_option("--folds", o.folds, "cross-fitting folds");
  cmd->add_option("--draws", o.draws, "Rademacher draws");
  cmd->add_option("--gamma", o.gamma, "bias inflation");
  cmd->add_option("--iota", o.iota, "holdout testing share");
  cmd->add_option("--rmax", o.rmax, "largest smoothness order tried");
  cmd->add_option("--starts", o.starts, "optimizer starts for welfare maximization");
  cmd->add_option("--rad-starts", o.rad_starts, "optimizer starts per Rademacher draw");
}

FitConfig to_config(const FitOptions& o) {
  FitConfig cfg;
  auto& s = cfg.selection;
  s.penalty = o.penalty == "holdout" ? PenaltyKind::Holdout : PenaltyKind::Rademacher;
  s.estimator = o.estimator == "ipw" ? EstimatorKind::Ipw : EstimatorKind::DoubleDebiased;
  s.k_min = o.kmin;
  s.k_max = o.kmax;
  s.folds = o.folds;
  s.draws = o.draws;
  s.iota = o.iota;
  s.seed = o.seed;
  s.optimizer.n_starts = o.starts;
  s.rademacher_optimizer.n_starts = o.rad_starts;
  cfg.grid = o.grid == "geo" ? GridKind::Geometric : GridKind::Exponential;
  cfg.rho = o.rho;
  cfg.bias.gamma = o.gamma;
  cfg.bias.r_max = o.rmax;
  if (!(o.gamma > 0.0)) throw Error(Errc::InvalidArgument, "gamma must be > 0");
  return cfg;
}

/// Propensity for IPW on observed data: a plug-in conditional density fit or a
/// uniform design on the observed treatment range.
PropensityOracle data_propensity(const Dataset& raw, const std::string& kind,
                                 const NuisanceConfig& ncfg) {
  PropensityOracle oracle;
  if (kind == "uniform") {
    const double width = raw.t_hi() - raw.t_lo();
    oracle.inverse_density = [width](double, std::span<const double>) { return width; };
    oracle.f_lower = 1.0 / width;
    return oracle;
  }
  const Dataset ds = rescale_covariates(raw);
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shared_ptr<const KernelConditionalDensity> kde = KernelConditionalDensity::fit(ds, all, ncfg);
  const auto scale = ds.x_scale();
  oracle.inverse_density = [kde, scale](double t, std::span<const double> x) {
    return kde->value(t, apply_scale(x, scale));
  };
  oracle.f_lower = kde->floor();
  return oracle;
}

ConfigEcho fit_echo(const FitOptions& o) {
  return {{"command", "fit"}, {"data", o.data}, {"dx", std::to_string(o.dx)},
          {"propensity", o.estimator == "ipw" ? o.propensity : "none"}};
}

int run_fit(const FitOptions& o, std::ostream& out) {
  const FitConfig cfg = to_config(o);
  const Dataset raw = load_csv(o.data, o.dx);
  PropensityOracle oracle;
  const PropensityOracle* prop = nullptr;
  if (cfg.selection.estimator == EstimatorKind::Ipw) {
    oracle = data_propensity(raw, o.propensity, cfg.selection.nuisance);
    prop = &oracle;
  }
  const FitReport rep = fit_policy(raw, cfg, prop);
  emit(o.out, fit_report_json(rep, cfg, fit_echo(o)), out);
  return 0;
}

struct SimOptions {
  FitOptions fit;
  std::string dgp = "smooth-quadratic";
  std::vector<std::size_t> n{500};
  std::size_t reps = 1;
  bool known_bias = false;
  std::string paths = "rademacher:dd";
};

std::vector<std::pair<PenaltyKind, EstimatorKind>> parse_paths(const std::string& spec) {
  std::vector<std::pair<PenaltyKind, EstimatorKind>> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "path '" + item + "'");
    const std::string p = item.substr(0, colon), e = item.substr(colon + 1);
    if ((p != "rademacher" && p != "holdout") || (e != "ipw" && e != "dd"))
      throw Error(Errc::InvalidArgument, "path '" + item + "'");
    out.emplace_back(p == "holdout" ? PenaltyKind::Holdout : PenaltyKind::Rademacher,
                     e == "ipw" ? EstimatorKind::Ipw : EstimatorKind::DoubleDebiased);
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "no estimation paths");
  return out;
}

int run_simulate(const SimOptions& o, std::ostream& out) {
  const DgpSpec spec = dgp_by_name(o.dgp, o.fit.dx);
  RegretConfig rc;
  rc.fit = to_config(o.fit);
  rc.paths = parse_paths(o.paths);
  rc.known_bias = o.known_bias;
  const auto records = run_regret_experiment(spec, o.n, o.reps, o.fit.seed, rc);
  emit(o.fit.out, regret_csv(records), out);
  return 0;
}

int run_biasbound(const FitOptions& o, std::ostream& out) {
  const Dataset ds = rescale_covariates(load_csv(o.data, o.dx));
  BiasFitConfig cfg;
  cfg.gamma = o.gamma;
  cfg.r_max = o.rmax;
  cfg.seed = derive_seed({o.seed, 0x42494153ULL});
  const MuFtCurve curve = estimate_mu_ft_curve(ds, cfg);
  const BiasBoundFit fit = fit_envelope(curve.xi, curve.magnitude, cfg.r_max, cfg.gamma);
  const BandwidthGrid grid = make_grid(o.grid == "geo" ? GridKind::Geometric : GridKind::Exponential,
                                       o.rho, ds.size(), fit.r_hat);
  const ConfigEcho echo{{"command", "biasbound"}, {"data", o.data}, {"dx", std::to_string(o.dx)},
                        {"seed", std::to_string(o.seed)}};
  emit(o.out, bias_report_json(fit, curve, grid, echo), out);
  return 0;
}

int run_evaluate(const std::string& policy_path, const std::string& data_path,
                 const std::string& out_path, std::ostream& out) {
  // Accept either a bare policy object or a full fit report.
  const std::string text = read_file(policy_path);
  const auto parsed = nlohmann::json::parse(text, nullptr, false);
  const FittedPolicy policy = policy_from_json(
      !parsed.is_discarded() && parsed.is_object() && parsed.contains("policy")
          ? parsed["policy"].dump()
          : text);
  const Dataset ds = load_csv(data_path, policy.family.d_x(), 1);
  std::vector<double> pred(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pred[i] = policy.on_raw(ds.x(i));
  nlohmann::ordered_json j = {{"n", ds.size()},
                              {"predictions", pred},
                              {"mean_treatment", mean(pred)},
                              {"version", kVersion}};
  emit(out_path, j.dump(2) + "\n", out);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-treatment policy learning with penalized bandwidth and sieve selection",
               "contpol"};
  app.set_version_flag("--version", std::string("contpol ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 1;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "select (h, k) and fit a policy on a CSV");
  fit_cmd->add_option("--data", fit.data, "CSV with header y,t,x1..xd")->required();
  fit_cmd->add_option("--dx", fit.dx, "number of covariates")->required();
  fit_cmd->add_option("--seed", fit.seed, "random seed")->required();
  fit_cmd->add_option("--out", fit.out, "report path (stdout when omitted)");
  fit_cmd->add_option("--propensity", fit.propensity, "IPW propensity: estimated | uniform")
      ->check(CLI::IsMember({"estimated", "uniform"}));
  add_selection_options(fit_cmd, fit);

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "regret experiment on a catalog DGP");
  sim_cmd->add_option("--dgp", sim.dgp, "DGP name")->check(CLI::IsMember(dgp_names()));
  sim_cmd->add_option("--n", sim.n, "sample sizes")->delimiter(',');
  sim_cmd->add_option("--reps", sim.reps, "replications per sample size");
  sim_cmd->add_option("--seed", sim.fit.seed, "random seed")->required();
  sim_cmd->add_option("--out", sim.fit.out, "CSV path (stdout when omitted)");
  sim_cmd->add_option("--dx", sim.fit.dx, "number of covariates");
  sim_cmd->add_option("--paths", sim.paths, "comma list of penalty:estimator");
  sim_cmd->add_flag("--known-bias", sim.known_bias, "use the DGP's known (r, V)");
  add_selection_options(sim_cmd, sim.fit);

  FitOptions bias;
  auto* bias_cmd = app.add_subcommand("biasbound", "estimate (r, V) and the bias bound per h");
  bias_cmd->add_option("--data", bias.data, "CSV with header y,t,x1..xd")->required();
  bias_cmd->add_option("--dx", bias.dx, "number of covariates")->required();
  bias_cmd->add_option("--seed", bias.seed, "random seed")->required();
  bias_cmd->add_option("--out", bias.out, "report path (stdout when omitted)");
  bias_cmd->add_option("--gamma", bias.gamma, "bias inflation");
  bias_cmd->add_option("--rmax", bias.rmax, "largest smoothness order tried");
  bias_cmd->add_option("--grid", bias.grid, "exp | geo")->check(CLI::IsMember({"exp", "geo"}));
  bias_cmd->add_option("--rho", bias.rho, "grid rate");

  std::string policy_path, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "apply a saved policy to a CSV");
  eval_cmd->add_option("--policy", policy_path, "policy JSON")->required();
  eval_cmd->add_option("--data", eval_data, "CSV with header y,t,x1..xd")->required();
  eval_cmd->add_option("--out", eval_out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "contpol " << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "ConfigError", e.what());
    return 2;
  }

  try {
    set_thread_count(threads);
    if (*fit_cmd) {
      if (fit_cmd->get_subcommands().empty() && fit_cmd->count("--help")) return 0;
      return run_fit(fit, out);
    }
    if (*sim_cmd) return run_simulate(sim, out);
    if (*bias_cmd) return run_biasbound(bias, out);
    if (*eval_cmd) return run_evaluate(policy_path, eval_data, eval_out, out);
  } catch (const Error& e) {
    report_error(err, errc_name(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report_error(err, "NumericalFailure", e.what());
    return 4;
  }
  return 2;
}

}  // namespace contpol::cli
