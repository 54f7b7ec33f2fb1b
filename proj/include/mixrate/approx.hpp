#pragma once

// Finite location mixtures of a dilated kernel, together with the rate
// schedule that ties the component count m to the dilation nu, and the
// experiment measuring Lp approximation error against that schedule.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mixrate/analysis.hpp"
#include "mixrate/kernels.hpp"
#include "mixrate/report.hpp"
#include "mixrate/targets.hpp"

namespace mixrate::approx {

// f(x) = sum_j w_j nu^d phi(nu (x - mu_j)). Weights are a probability vector
// (nonnegative, summing to 1 within 1e-12).
class MixtureModel {
 public:
  MixtureModel(kernels::KernelDensity kernel, double nu, std::vector<double> weights,
               std::vector<double> locations_flat);

  double operator()(std::span<const double> x) const;

  const kernels::KernelDensity& kernel() const { return kernel_; }
  double nu() const { return nu_; }
  int dim() const { return kernel_.dim(); }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& locations_flat() const { return locations_; }
  std::span<const double> location(std::size_t j) const;

 private:
  kernels::KernelDensity kernel_;
  double nu_;
  double scale_;  // nu^d
  std::vector<double> weights_;
  std::vector<double> locations_;
};

// Rate exponent of the m-term approximation error in Lp: with q = p/(p-1),
//   -alpha / (alpha q + d)        for 1 < p < 2,
//   -alpha q / (2 (alpha q + d))  for p >= 2.
double rate_exponent(double p, double alpha, int d);

// Dilation schedule balancing the sampling and smoothing error terms:
// nu_m = B^(-q/(alpha q + d)) m^e with B = 3 d |phi|_p C_p / (alpha q K1 K2)
// and e = 1/(alpha q + d) for p < 2, q/(2 (alpha q + d)) for p >= 2.
double optimal_nu(std::size_t m, double p, double alpha, int d, double k1, double k2,
                  double phi_norm_p, double c_p);

// Leading constant of the balanced error bound K m^(rate_exponent):
// K = 3 |phi|_p C_p B^(-d/(alpha q + d)) + K1 K2 B^(alpha q / (alpha q + d)).
double theorem_constant_k(double p, double alpha, int d, double k1, double k2,
                          double phi_norm_p, double c_p);

// Equal-weight mixture with i.i.d. locations drawn from the target: the
// sampled version of the smoothed target phi_nu * f0.
MixtureModel maurey_sample(const targets::TargetDensity& f0,
                           const kernels::KernelDensity& kernel, double nu, std::size_t m,
                           std::uint64_t seed);

// Greedy L2 refinement: each step picks the candidate atom (with an exact
// line search toward it) that most decreases ||f - reference||_2^2, then
// reweights. Tensor quadrature only; p must equal 2.
MixtureModel greedy_refine(const MixtureModel& init, const analysis::PointFn& reference,
                           double p, const analysis::QuadratureSpec& quad, int steps,
                           const std::vector<std::vector<double>>& candidate_locations,
                           std::vector<double>* objective_trace = nullptr);

struct ApproxRateConfig {
  kernels::KernelDensity kernel;
  targets::TargetDensity target;
  double p = 2.0;
  std::optional<double> alpha;  // default: target smoothness order
  std::optional<double> c_p;    // default: 1 for p == 2, else 2
  std::vector<std::size_t> m_grid;
  int trials = 20;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<analysis::QuadratureSpec> quad;  // default: default_quadrature
};

// Sweeps m over the grid with nu on the balanced schedule, measuring the Lp
// error of Maurey-sampled mixtures over independent trials. Rows carry both
// the trial mean and the best trial; with p = 2 and C_2 = 1 the per-row
// bound K m^exponent is asserted, otherwise it is reported only.
harness::RateReport approx_rate_experiment(const ApproxRateConfig& config);

}  // namespace mixrate::approx
