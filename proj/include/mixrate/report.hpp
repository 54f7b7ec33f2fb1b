#pragma once

// Experiment reports: per-size rows, a fitted log-log slope, the theoretical
// exponent, and a three-way verdict (pass / fail / not_certified).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixrate/common.hpp"

namespace mixrate::harness {

enum class Verdict { pass, fail, not_certified };

const char* verdict_name(Verdict v);

struct RateRow {
  double size = 0.0;        // m (approximation) or n (estimation)
  double nu = 0.0;
  double mean_error = 0.0;  // mean Lp error, or mean squared L2 error
  double std_error = 0.0;   // standard error of that mean
  double best_error = 0.0;  // best single trial
  double bound = 0.0;       // theoretical bound for this size (0 if none)
  bool bound_certified = false;
  bool bound_ok = true;
  double epsilon = 0.0;     // estimation tolerance at this size (0 otherwise)
  std::uint64_t trials = 0;
};

struct LoglogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  std::vector<std::string> warnings;
};

// OLS of log(value) on log(size). Rows with nonpositive values are excluded
// with a warning; fewer than 3 usable rows raises InsufficientData.
LoglogFit fit_loglog_slope(std::span<const double> sizes, std::span<const double> values);

struct RateReport {
  std::string experiment;  // approx_rate | estimate_rate
  std::vector<RateRow> rows;
  LoglogFit fit;
  double theoretical_exponent = 0.0;
  double slope_tolerance = 0.1;
  double constant_k = 0.0;
  bool constants_certified = false;  // bound rows are asserted, not just reported
  std::size_t fits_total = 0;        // estimation: optimizer certificates
  std::size_t fits_certified = 0;
  std::size_t decomposition_checked = 0;  // estimation: risk-decomposition checks
  std::size_t decomposition_passed = 0;
  Verdict verdict = Verdict::fail;
  std::vector<std::string> notes;
  std::string provenance;

  bool slope_ok() const {
    return fit.slope <= theoretical_exponent + slope_tolerance;
  }
};

// Shared verdict rule: a failing slope (or failing certified bound rows, or a
// failed decomposition check) is fail; a passing slope with uncertified
// bounds or uncertified fits is not_certified; otherwise pass.
Verdict decide_verdict(const RateReport& report);

}  // namespace mixrate::harness
