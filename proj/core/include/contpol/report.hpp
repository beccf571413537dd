#pragma once

#include <string>
#include <utility>
#include <vector>

#include "contpol/bias_bound.hpp"
#include "contpol/selection.hpp"
#include "contpol/sieve.hpp"

namespace contpol {

/// Policy JSON: {family, d_x, k, theta, x_scale, out_lo, out_hi}.
std::string policy_to_json(const FittedPolicy& policy);
FittedPolicy policy_from_json(const std::string& text);

/// Extra string-valued entries echoed into the report's config block.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// Report JSON: {config, selection_table, chosen, policy, diagnostics}.
/// Contains no timestamps or worker counts, so equal inputs give equal bytes.
std::string fit_report_json(const FitReport& report, const FitConfig& cfg,
                            const ConfigEcho& echo = {});

/// {r_hat, V_hat, gamma, all_values_zero, curve: {xi, magnitude, noise_se}, bias: [{h, B}]}.
std::string bias_report_json(const BiasBoundFit& fit, const MuFtCurve& curve,
                             const BandwidthGrid& grid, const ConfigEcho& echo = {});

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace contpol
