#pragma once

// Least-squares mixture density estimation: the Gram/moment reduction of the
// empirical L2 risk, a Frank-Wolfe weight solver with a duality-gap
// certificate, the adaptive m = ceil(sqrt(n)) estimator, and the diagnostic
// checks (risk decomposition, convex-hull suprema, empirical-process decay)
// behind its rate experiment.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixrate/analysis.hpp"
#include "mixrate/approx.hpp"
#include "mixrate/kernels.hpp"
#include "mixrate/report.hpp"
#include "mixrate/targets.hpp"

namespace mixrate::estimate {

// G(j,k) = <phi_nu(. - mu_j), phi_nu(. - mu_k)> = nu^d (phi*phi)(nu (mu_j - mu_k)).
// Locations are row-major, m rows of kernel.dim() entries. Needs a symmetric
// kernel; falls back to quadrature only for kernels without a closed-form
// self-convolution.
Eigen::MatrixXd gram_matrix(const kernels::KernelDensity& kernel, double nu,
                            std::span<const double> locations_flat, std::size_t m);

// b(j) = (1/n) sum_i phi_nu(X_i - mu_j), the empirical moment vector.
Eigen::VectorXd moment_vector(const kernels::KernelDensity& kernel, double nu,
                              std::span<const double> locations_flat, std::size_t m,
                              const analysis::EmpiricalMeasure& sample);

// b(j) = E phi_nu(X - mu_j) = (phi_nu * f0)(mu_j) for symmetric kernels.
Eigen::VectorXd population_moment_vector(const kernels::KernelDensity& kernel, double nu,
                                         std::span<const double> locations_flat, std::size_t m,
                                         const targets::TargetDensity& f0);

// ||f||_2^2 - 2 P_n f = w' G w - 2 w' b, the empirical L2 risk of the mixture
// (up to the constant ||f0||^2 that the minimizer ignores).
double empirical_risk(const approx::MixtureModel& mixture,
                      const analysis::EmpiricalMeasure& sample);

struct WeightFit {
  std::vector<double> weights;
  double risk = 0.0;          // w' G w - 2 w' b at the returned weights
  double duality_gap = 0.0;   // Frank-Wolfe gap at the returned weights
  double epsilon = 0.0;       // requested tolerance
  std::size_t iterations = 0;
  bool certified = false;     // gap <= epsilon was reached
  std::vector<double> risk_trace;  // risk before each step and after the last
};

// Minimizes w' G w - 2 w' b over the probability simplex by Frank-Wolfe with
// exact line search. Stops when the duality gap certifies an epsilon-optimal
// iterate or after max_iters steps; `certified` records which.
WeightFit fit_weights_frank_wolfe(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moments,
                                  double epsilon, std::size_t max_iters);

struct AdaptiveOptions {
  double s = 0.4;             // assumed smoothness order of the target
  double b3 = 1.0;            // tolerance constant: epsilon_n = b3 n^(-s/(2s+d))
  std::string candidate_rule = "subsample";  // subsample | grid
  std::size_t max_iters = 2000;
  double c2 = 1.0;            // Rosenthal-type constant in the nu schedule
  std::optional<double> k1;   // kernel moment of order s; default: computed
  std::optional<double> k2;   // target smoothness constant; default 1
  std::uint64_t seed = 1;     // candidate subsample shuffle
};

struct LeastSquaresFit {
  approx::MixtureModel mixture;
  double risk = 0.0;
  double duality_gap = 0.0;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  bool certified = false;
  double nu = 0.0;
  std::size_t m = 0;
};

// The adaptive estimator: m = ceil(sqrt(n)) components, nu on the balanced
// L2 schedule at order s, candidate locations from the sample (or a lattice
// over its bounding box), weights by Frank-Wolfe to tolerance epsilon_n.
LeastSquaresFit adaptive_estimate(const analysis::EmpiricalMeasure& sample,
                                  const kernels::KernelDensity& kernel,
                                  const AdaptiveOptions& options);

struct KlemelaTerms {
  double lhs = 0.0;           // ||fhat - f0||_2^2
  double f_star_error = 0.0;  // ||fstar - f0||_2^2
  double fluctuation = 0.0;   // 2 (P_n - P)(fhat - fstar)
  double epsilon_used = 0.0;  // epsilon if certified, else the duality gap
  bool holds = false;
};

// Verifies ||fhat - f0||^2 <= ||fstar - f0||^2 + 2(P_n - P)(fhat - fstar) + eps
// for a reference mixture fstar over the same atoms. The inequality is exact
// algebra whenever the fitted risk is within eps of the reference risk, so a
// failure flags either the optimizer or the integration.
KlemelaTerms klemela_decomposition_check(const LeastSquaresFit& fit,
                                         const approx::MixtureModel& f_star,
                                         const targets::TargetDensity& f0,
                                         const analysis::EmpiricalMeasure& sample,
                                         const analysis::QuadratureSpec& quad);

struct EmpiricalProcessConfig {
  std::vector<std::size_t> n_grid;
  int trials = 10;
  int mu_grid_count = 41;      // evaluation lattice per axis
  double mu_grid_radius = 4.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct EmpiricalProcessResult {
  std::vector<double> sizes;
  std::vector<double> sup_means;  // mean over trials of sup_mu |(P_n - P) g_mu|
  std::vector<double> bounds;     // nu^d ||phi||_inf sqrt(vc / n)
  harness::LoglogFit fit;         // slope of sup_means vs n, expect -1/2
  bool bound_ok = true;           // every mean under its bound
};

// Uniform deviations of the empirical measure over the dilated kernel class
// {phi_nu(. - mu)}: decay in n and comparison against the envelope bound.
EmpiricalProcessResult empirical_process_sup(const kernels::KernelDensity& kernel, double nu,
                                             const targets::TargetDensity& f0,
                                             const EmpiricalProcessConfig& config);

struct ConvexSupConfig {
  std::size_t n = 500;
  std::size_t atoms = 5;
  std::size_t combos = 100;
  std::size_t seeds = 10;
  double atom_radius = 3.0;  // atom locations uniform in this box
  std::uint64_t seed = 1;
};

struct ConvexSupResult {
  std::size_t cases_total = 0;
  std::size_t cases_passed = 0;
  double max_excess = 0.0;  // most a combination deviation exceeded the atom max
};

// For random atom sets and random convex combinations, checks that the
// deviation |(P_n - P) sum_j lambda_j g_j| never exceeds max_j |(P_n - P) g_j|:
// the supremum over a convex hull is attained at an atom.
ConvexSupResult convex_sup_check(const kernels::KernelDensity& kernel, double nu,
                                 const targets::TargetDensity& f0,
                                 const ConvexSupConfig& config);

struct EstimateRateConfig {
  kernels::KernelDensity kernel;
  targets::TargetDensity target;
  AdaptiveOptions options;
  std::vector<std::size_t> n_grid;
  int trials = 20;
  std::uint64_t seed = 1;
  int threads = 1;
  bool check_decomposition = true;
  std::optional<analysis::QuadratureSpec> quad;
};

// Sweeps n, fitting the adaptive estimator on fresh samples and measuring the
// squared L2 error. Rows carry epsilon_n; the report tallies optimizer
// certificates and (optionally) per-trial risk-decomposition checks, and fits
// the slope against the theoretical exponent -s/(2s+d).
harness::RateReport estimation_rate_experiment(const EstimateRateConfig& config);

}  // namespace mixrate::estimate
