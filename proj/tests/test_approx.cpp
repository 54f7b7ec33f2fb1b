#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "doctest.h"
#include "mixrate/analysis.hpp"
#include "mixrate/approx.hpp"

using mixrate::InsufficientData;
using mixrate::InvalidParameter;
namespace analysis = mixrate::analysis;
namespace approx = mixrate::approx;
namespace kernels = mixrate::kernels;
namespace targets = mixrate::targets;
using analysis::QuadratureSpec;

namespace {

QuadratureSpec box1(double radius, int points) {
  return QuadratureSpec::symmetric_box(1, radius, points);
}

approx::ApproxRateConfig smoke_config() {
  approx::ApproxRateConfig cfg{kernels::make_kernel("gaussian", 1),
                               targets::make_target("gaussian", 1),
                               2.0,
                               std::nullopt,
                               std::nullopt,
                               {4, 8, 16, 32},
                               5,
                               1,
                               1,
                               std::nullopt};
  return cfg;
}

}  // namespace

TEST_CASE("rate exponent follows both regimes and is continuous at p = 2") {
  CHECK(approx::rate_exponent(2.0, 1.0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
  CHECK(approx::rate_exponent(1.5, 0.5, 1) == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(approx::rate_exponent(3.0, 1.0, 1) == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(approx::rate_exponent(2.0, 0.5, 2) ==
        doctest::Approx(-0.5 * 2.0 / (2.0 * 3.0)).epsilon(1e-14));

  // The two branches meet at p = 2.
  CHECK(approx::rate_exponent(2.0 - 1e-9, 1.0, 1) ==
        doctest::Approx(approx::rate_exponent(2.0, 1.0, 1)).epsilon(1e-7));
  CHECK(approx::rate_exponent(2.0 + 1e-9, 1.0, 1) ==
        doctest::Approx(approx::rate_exponent(2.0, 1.0, 1)).epsilon(1e-7));

  CHECK_THROWS_AS(approx::rate_exponent(1.0, 1.0, 1), InvalidParameter);
  CHECK_THROWS_AS(approx::rate_exponent(2.0, 0.0, 1), InvalidParameter);
  CHECK_THROWS_AS(approx::rate_exponent(2.0, 1.5, 1), InvalidParameter);
  CHECK_THROWS_AS(approx::rate_exponent(2.0, 1.0, 0), InvalidParameter);
}

TEST_CASE("the dilation schedule matches its closed form and grows with m") {
  // All-ones constants, p = 2, alpha = 1, d = 1: bracket = 3/2, exponent 1/3.
  CHECK(approx::optimal_nu(8, 2.0, 1.0, 1, 1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::pow(1.5, -2.0 / 3.0) * 2.0).epsilon(1e-12));
  // p = 1.5, alpha = 0.5: bracket = 2 and m^(1/2.5) cancel exactly at m = 8.
  CHECK(approx::optimal_nu(8, 1.5, 0.5, 1, 1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  double prev = 0.0;
  for (std::size_t m : {4, 16, 64, 256}) {
    const double nu = approx::optimal_nu(m, 2.0, 1.0, 1, 0.8, 0.4, 0.53, 1.0);
    CHECK(nu > prev);
    prev = nu;
  }

  // Continuity across the p = 2 branch point.
  const double at2 = approx::optimal_nu(32, 2.0, 1.0, 1, 0.8, 0.4, 0.53, 1.0);
  CHECK(approx::optimal_nu(32, 2.0 - 1e-9, 1.0, 1, 0.8, 0.4, 0.53, 1.0) ==
        doctest::Approx(at2).epsilon(1e-6));
  CHECK(approx::optimal_nu(32, 2.0 + 1e-9, 1.0, 1, 0.8, 0.4, 0.53, 1.0) ==
        doctest::Approx(at2).epsilon(1e-6));

  CHECK_THROWS_AS(approx::optimal_nu(0, 2.0, 1.0, 1, 1.0, 1.0, 1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(approx::optimal_nu(8, 2.0, 1.0, 1, 0.0, 1.0, 1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(approx::optimal_nu(8, 2.0, 1.0, 1, 1.0, -1.0, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("the balanced error constant combines both terms") {
  // p = 1.5, alpha = 1, q = 3, all other constants 1: bracket = 1, so
  // K = 3 + 1 = 4.
  CHECK(approx::theorem_constant_k(1.5, 1.0, 1, 1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(4.0).epsilon(1e-14));

  // Independent arithmetic for a realistic parameter set.
  const double p = 2.0, alpha = 1.0;
  const int d = 1;
  const double k1 = std::sqrt(2.0 / M_PI);
  const double k2 = 0.5 * std::pow(M_PI, -0.25);
  const double phi = 0.5311259660135984;
  const double q = p / (p - 1.0);
  const double denom = alpha * q + d;
  const double bracket = 3.0 * d * phi * 1.0 / (alpha * q * k1 * k2);
  const double expected = 3.0 * phi * std::pow(bracket, -d / denom) +
                          k1 * k2 * std::pow(bracket, alpha * q / denom);
  CHECK(approx::theorem_constant_k(p, alpha, d, k1, k2, phi, 1.0) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(1.7252603812).epsilon(1e-9));
}

TEST_CASE("sampled mixtures are equal-weight draws from the target") {
  auto f0 = targets::make_target("gaussian", 1);
  auto kernel = kernels::make_kernel("gaussian", 1);
  const auto mix = approx::maurey_sample(f0, kernel, 2.0, 16, 77);
  CHECK(mix.size() == 16);
  CHECK(mix.nu() == doctest::Approx(2.0));
  for (double w : mix.weights()) CHECK(w == doctest::Approx(1.0 / 16.0).epsilon(1e-15));

  // The locations are exactly the seeded sample path of the target.
  const auto sample = analysis::EmpiricalMeasure::draw(f0, 16, 77);
  CHECK(mix.locations_flat() == sample.flat());

  const auto again = approx::maurey_sample(f0, kernel, 2.0, 16, 77);
  CHECK(again.locations_flat() == mix.locations_flat());
  const auto other = approx::maurey_sample(f0, kernel, 2.0, 16, 78);
  CHECK(other.locations_flat() != mix.locations_flat());

  // Mixture evaluation: a single atom is the dilated kernel at that center.
  approx::MixtureModel single(kernel, 2.0, {1.0}, {0.5});
  double x = 0.8;
  const double expected = 2.0 * std::exp(-0.5 * 0.36) / std::sqrt(2.0 * M_PI);
  CHECK(single(std::span<const double>(&x, 1)) == doctest::Approx(expected).epsilon(1e-14));

  // Construction guards.
  CHECK_THROWS_AS(approx::MixtureModel(kernel, 2.0, {0.5, 0.6}, {0.0, 1.0}),
                  InvalidParameter);
  CHECK_THROWS_AS(approx::MixtureModel(kernel, 2.0, {1.5, -0.5}, {0.0, 1.0}),
                  InvalidParameter);
  CHECK_THROWS_AS(approx::MixtureModel(kernel, 2.0, {1.0}, {0.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(approx::MixtureModel(kernel, -2.0, {1.0}, {0.0}), InvalidParameter);
  CHECK_THROWS_AS(approx::maurey_sample(f0, kernel, 2.0, 0, 1), InvalidParameter);
}

TEST_CASE("sampling error matches the variance identity in L2") {
  auto f0 = targets::make_target("gaussian", 1);
  auto kernel = kernels::make_kernel("gaussian", 1);
  const double nu = 2.0;
  const auto conv = analysis::convolution(kernels::dilate(kernel, nu), f0);
  const auto quad = box1(12.0, 4097);

  // E || f_m - phi_nu * f0 ||_2^2 = ( ||phi_nu||_2^2 - ||phi_nu * f0||_2^2 ) / m.
  const double phi_nu_sq = nu * std::pow(4.0 * M_PI, -0.5);
  const double conv_sq = std::pow(4.0 * M_PI * (1.0 + 1.0 / (nu * nu)), -0.5);

  for (std::size_t m : {4, 16}) {
    const double identity = (phi_nu_sq - conv_sq) / static_cast<double>(m);
    const int seeds = 50;
    std::vector<double> sq(seeds);
    for (int s = 0; s < seeds; ++s) {
      const auto mix = approx::maurey_sample(f0, kernel, nu, m, 1000 + s);
      const double dist = analysis::lp_distance(
          [&](std::span<const double> x) { return mix(x); }, conv, 2.0, quad);
      sq[static_cast<std::size_t>(s)] = dist * dist;
    }
    double mean = 0.0;
    for (double v : sq) mean += v;
    mean /= seeds;
    double var = 0.0;
    for (double v : sq) var += (v - mean) * (v - mean);
    var /= (seeds - 1);
    const double se = std::sqrt(var / seeds);
    CAPTURE(m);
    CHECK(std::abs(mean - identity) < 5.0 * se);
    CHECK(mean <= phi_nu_sq / static_cast<double>(m));  // coarse variance bound
  }
}

TEST_CASE("greedy refinement descends and recovers representable mixtures") {
  auto kernel = kernels::make_kernel("gaussian", 1);
  const auto quad = box1(8.0, 2049);

  // Exactly representable reference: recovered to rounding in one pass.
  approx::MixtureModel ref(kernel, 2.0, {0.4, 0.6}, {-1.0, 0.5});
  auto ref_fn = [&](std::span<const double> x) { return ref(x); };
  approx::MixtureModel init(kernel, 2.0, {1.0}, {-1.0});
  const std::vector<std::vector<double>> cands = {{-1.0}, {0.5}};

  std::vector<double> trace;
  const auto refined = approx::greedy_refine(init, ref_fn, 2.0, quad, 4, cands, &trace);
  REQUIRE(trace.size() >= 2);
  CHECK(trace.front() > 1e-3);
  CHECK(trace.back() < 1e-20);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
  REQUIRE(refined.size() == 2);
  // Atom order: the initial atom stays first.
  CHECK(refined.weights()[0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(refined.weights()[1] == doctest::Approx(0.6).epsilon(1e-9));

  // Zero steps is a no-op.
  std::vector<double> trace0;
  const auto same = approx::greedy_refine(init, ref_fn, 2.0, quad, 0, cands, &trace0);
  CHECK(same.size() == 1);
  CHECK(same.locations_flat() == init.locations_flat());
  CHECK(trace0.size() == 1);

  // A non-representable target still yields a monotone objective trace.
  auto f0 = targets::make_target("gaussian", 1);
  auto f0_fn = [&](std::span<const double> x) { return f0(x); };
  std::vector<std::vector<double>> lattice;
  for (double c = -3.0; c <= 3.0 + 1e-12; c += 0.5) lattice.push_back({c});
  std::vector<double> trace2;
  approx::MixtureModel init2(kernel, 2.0, {1.0}, {0.0});
  const auto out = approx::greedy_refine(init2, f0_fn, 2.0, quad, 8, lattice, &trace2);
  CHECK(out.size() >= 2);
  CHECK(trace2.back() < trace2.front());
  for (std::size_t i = 1; i < trace2.size(); ++i) CHECK(trace2[i] <= trace2[i - 1] + 1e-15);

  // Guards: p, steps, candidate grid, quadrature mode.
  CHECK_THROWS_AS(approx::greedy_refine(init, ref_fn, 1.5, quad, 1, cands, nullptr),
                  InvalidParameter);
  CHECK_THROWS_AS(approx::greedy_refine(init, ref_fn, 2.0, quad, -1, cands, nullptr),
                  InvalidParameter);
  CHECK_THROWS_AS(approx::greedy_refine(init, ref_fn, 2.0, quad, 1, {}, nullptr),
                  InvalidParameter);
  const std::vector<std::vector<double>> bad_dim = {{0.0, 0.0}};
  CHECK_THROWS_AS(approx::greedy_refine(init, ref_fn, 2.0, quad, 1, bad_dim, nullptr),
                  InvalidParameter);
  CHECK_THROWS_AS(approx::greedy_refine(init, ref_fn, 2.0,
                                        QuadratureSpec::monte_carlo_box(1, 8.0, 1024, 1), 1,
                                        cands, nullptr),
                  InvalidParameter);
}

TEST_CASE("the approximation rate experiment is deterministic and certified at p = 2") {
  auto cfg = smoke_config();
  cfg.m_grid = {4, 8, 16, 32, 64, 128};
  cfg.trials = 8;
  const auto report = approx::approx_rate_experiment(cfg);

  REQUIRE(report.rows.size() == 6);
  CHECK(report.experiment == "approx_rate");
  CHECK(report.theoretical_exponent == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(report.constants_certified);
  double prev_nu = 0.0;
  for (const auto& row : report.rows) {
    CHECK(row.trials == 8);
    CHECK(row.nu > prev_nu);
    prev_nu = row.nu;
    CHECK(row.bound_certified);
    CHECK(row.bound_ok);
    CHECK(row.mean_error > 0.0);
    CHECK(row.best_error <= row.mean_error);
    CHECK(row.std_error > 0.0);
  }
  CHECK(report.fit.slope < -0.2);
  CHECK(report.verdict == mixrate::harness::Verdict::pass);

  // Bitwise reproducibility across reruns and thread counts.
  const auto again = approx::approx_rate_experiment(cfg);
  auto cfg_mt = cfg;
  cfg_mt.threads = 2;
  const auto threaded = approx::approx_rate_experiment(cfg_mt);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(report.rows[i].mean_error == again.rows[i].mean_error);
    CHECK(report.rows[i].std_error == again.rows[i].std_error);
    CHECK(report.rows[i].best_error == again.rows[i].best_error);
    CHECK(report.rows[i].mean_error == threaded.rows[i].mean_error);
    CHECK(report.rows[i].std_error == threaded.rows[i].std_error);
  }

  // Different seeds move the measured errors.
  auto cfg_seed = cfg;
  cfg_seed.seed = 2;
  const auto reseeded = approx::approx_rate_experiment(cfg_seed);
  CHECK(reseeded.rows[0].mean_error != report.rows[0].mean_error);
}

TEST_CASE("standard errors shrink like one over root trials") {
  auto cfg = smoke_config();
  cfg.m_grid = {4, 8, 16};
  cfg.trials = 64;
  const auto r64 = approx::approx_rate_experiment(cfg);
  cfg.trials = 128;
  const auto r128 = approx::approx_rate_experiment(cfg);
  for (std::size_t i = 0; i < r64.rows.size(); ++i) {
    const double ratio = r128.rows[i].std_error / r64.rows[i].std_error;
    CAPTURE(i);
    CHECK(ratio > 1.0 / std::sqrt(2.0) * 0.75);
    CHECK(ratio < 1.0 / std::sqrt(2.0) * 1.25);
  }
}

TEST_CASE("uncertified norms downgrade the verdict instead of asserting bounds") {
  auto cfg = smoke_config();
  cfg.p = 1.5;  // default C_p = 2: reported, not certified
  cfg.m_grid = {4, 8, 16, 32, 64};
  const auto report = approx::approx_rate_experiment(cfg);
  CHECK_FALSE(report.constants_certified);
  CHECK(report.theoretical_exponent == doctest::Approx(-0.25).epsilon(1e-12));
  for (const auto& row : report.rows) {
    CHECK(row.bound > 0.0);
    CHECK_FALSE(row.bound_certified);
  }
  CHECK(report.fit.slope <= -0.15);
  CHECK(report.verdict == mixrate::harness::Verdict::not_certified);
}

TEST_CASE("experiment configuration is validated") {
  auto cfg = smoke_config();
  cfg.m_grid = {4, 8};
  CHECK_THROWS_AS(approx::approx_rate_experiment(cfg), InsufficientData);
  cfg = smoke_config();
  cfg.m_grid = {8, 8, 16};
  CHECK_THROWS_AS(approx::approx_rate_experiment(cfg), InvalidParameter);
  cfg = smoke_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(approx::approx_rate_experiment(cfg), InvalidParameter);
  cfg = smoke_config();
  cfg.p = 1.0;
  CHECK_THROWS_AS(approx::approx_rate_experiment(cfg), InvalidParameter);
}
