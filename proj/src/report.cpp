#include "mixrate/report.hpp"

#include <algorithm>
#include <cmath>

namespace mixrate::harness {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_certified: return "not_certified";
  }
  return "unknown";
}

LoglogFit fit_loglog_slope(std::span<const double> sizes, std::span<const double> values) {
  if (sizes.size() != values.size())
    throw InvalidParameter("fit_loglog_slope needs sizes and values of equal length");

  LoglogFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0))
      throw InvalidParameter("fit_loglog_slope sizes must be positive");
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      fit.warnings.push_back("excluded row with nonpositive value at size " +
                             std::to_string(sizes[i]));
      continue;
    }
    lx.push_back(std::log(sizes[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 3)
    throw InsufficientData("fit_loglog_slope needs at least 3 rows with positive values; got " +
                           std::to_string(lx.size()));

  const std::size_t n = lx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw InsufficientData("fit_loglog_slope needs at least two distinct sizes");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points_used = n;
  return fit;
}

Verdict decide_verdict(const RateReport& report) {
  if (!report.slope_ok()) return Verdict::fail;
  bool bounds_ok = true;
  for (const auto& row : report.rows)
    if (row.bound_certified && !row.bound_ok) bounds_ok = false;
  if (!bounds_ok) return Verdict::fail;
  if (report.decomposition_checked > 0 &&
      report.decomposition_passed != report.decomposition_checked)
    return Verdict::fail;
  const bool any_uncertified_bound =
      !report.constants_certified ||
      std::any_of(report.rows.begin(), report.rows.end(),
                  [](const RateRow& r) { return r.bound > 0.0 && !r.bound_certified; });
  const bool fits_ok = report.fits_total == report.fits_certified;
  if (any_uncertified_bound || !fits_ok) return Verdict::not_certified;
  return Verdict::pass;
}

}  // namespace mixrate::harness
