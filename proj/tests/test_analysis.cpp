#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "doctest.h"
#include "mixrate/analysis.hpp"

using mixrate::InvalidParameter;
using mixrate::NumericalFailure;
using mixrate::UnsupportedTarget;
namespace analysis = mixrate::analysis;
namespace kernels = mixrate::kernels;
namespace targets = mixrate::targets;
using analysis::QuadratureSpec;

namespace {

QuadratureSpec box1(double radius, int points) {
  return QuadratureSpec::symmetric_box(1, radius, points);
}

double normal_pdf_var(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

// Same evaluator as the target, but stripped of the mixture structure so the
// convolution has to take the numeric path.
targets::TargetDensity strip_structure(const targets::TargetDensity& t) {
  auto eval = [&t](std::span<const double> x) { return t(x); };
  auto sampler = [](std::mt19937_64&, std::span<double> out) {
    for (auto& v : out) v = 0.0;
  };
  return targets::TargetDensity("stripped", t.dim(), eval, sampler,
                                t.axis_effective_radius(), t.smoothness());
}

}  // namespace

TEST_CASE("quadrature specs validate bounds and resolution") {
  QuadratureSpec q = QuadratureSpec::symmetric_box(1, 1.0, 64);
  CHECK_NOTHROW(q.validate());

  QuadratureSpec bad = q;
  bad.lo = {1.0};
  bad.hi = {-1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);

  bad = q;
  bad.lo.clear();
  bad.hi.clear();
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);

  bad = q;
  bad.points_per_axis = 8;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);

  bad = q;
  bad.lo = {-mixrate::kInf};
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);

  QuadratureSpec mc = QuadratureSpec::monte_carlo_box(2, 1.0, 1024, 7);
  CHECK_NOTHROW(mc.validate());
  mc.sample_count = 8;
  CHECK_THROWS_AS(mc.validate(), InvalidParameter);

  CHECK_THROWS_AS(QuadratureSpec::symmetric_box(0, 1.0, 64), InvalidParameter);
  CHECK_THROWS_AS(QuadratureSpec::symmetric_box(1, -1.0, 64), InvalidParameter);
}

TEST_CASE("tensor quadrature is exact on multilinear integrands") {
  // The trapezoid rule integrates affine functions exactly.
  const double lin = analysis::integrate(
      [](std::span<const double> x) { return 2.0 * x[0] + 1.0; },
      QuadratureSpec::tensor({0.0}, {2.0}, 97));
  CHECK(lin == doctest::Approx(6.0).epsilon(1e-13));

  const double bilin = analysis::integrate(
      [](std::span<const double> x) { return (2.0 * x[0] + 1.0) * (3.0 - x[1]); },
      QuadratureSpec::tensor({0.0, 0.0}, {2.0, 2.0}, 33));
  CHECK(bilin == doctest::Approx(24.0).epsilon(1e-13));

  // Smooth integrands converge fast: the normal density has unit mass.
  const double mass = analysis::integrate(
      [](std::span<const double> x) { return normal_pdf_var(x[0], 0.0, 1.0); },
      box1(9.0, 4096));
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  // integrate_1d and simpson_1d agree on a smooth integrand.
  auto f = [](double t) { return std::exp(-t * t); };
  const double trap = analysis::integrate_1d(f, -3.0, 3.0, 4097);
  const double simp = analysis::simpson_1d(f, -3.0, 3.0, 4096);
  CHECK(trap == doctest::Approx(simp).epsilon(1e-10));
  CHECK(trap == doctest::Approx(std::sqrt(M_PI) * std::erf(3.0)).epsilon(1e-10));
}

TEST_CASE("monte carlo integration is seeded and reproducible") {
  auto f = [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  };
  const auto mc = QuadratureSpec::monte_carlo_box(3, 1.0, 65536, 11);
  const double v1 = analysis::integrate(f, mc);
  const double v2 = analysis::integrate(f, mc);
  CHECK(v1 == v2);                                    // identical seeds, identical values
  CHECK(v1 == doctest::Approx(8.0).epsilon(0.02));    // int over [-1,1]^3 is 8

  auto mc2 = mc;
  mc2.seed = 12;
  CHECK(analysis::integrate(f, mc2) != v1);
}

TEST_CASE("non-finite integrands are reported with the offending point") {
  auto bad = [](std::span<const double> x) {
    return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  CHECK_THROWS_AS(analysis::integrate(bad, box1(1.0, 64)), NumericalFailure);
  try {
    analysis::integrate(bad, box1(1.0, 64));
  } catch (const NumericalFailure& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
    CHECK(msg.find("at point") != std::string::npos);
  }
}

TEST_CASE("Lp distances of shifted normals match the closed form") {
  auto f = [](std::span<const double> x) { return normal_pdf_var(x[0], 0.0, 1.0); };
  auto g = [](std::span<const double> x) { return normal_pdf_var(x[0], 0.5, 1.0); };
  const auto quad = box1(10.0, 32769);

  // ||f - g||_2^2 = 2 (4 pi)^(-1/2) (1 - exp(-delta^2/4)) for a shift delta.
  const double expected =
      std::sqrt(2.0 * std::pow(4.0 * M_PI, -0.5) * (1.0 - std::exp(-0.0625)));
  const double measured = analysis::lp_distance(f, g, 2.0, quad);
  CHECK(measured == doctest::Approx(expected).epsilon(1e-9));
  CHECK(measured == doctest::Approx(0.184885150458).epsilon(1e-9));

  // ||f||_2 is the frozen normal norm; distances obey symmetry.
  CHECK(analysis::lp_norm(f, 2.0, quad) ==
        doctest::Approx(0.5311259660135984).epsilon(1e-9));
  CHECK(analysis::lp_distance(g, f, 2.0, quad) == doctest::Approx(measured).epsilon(1e-12));
  CHECK(analysis::lp_distance(f, f, 2.0, quad) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(analysis::lp_distance(f, g, 0.5, quad), InvalidParameter);
}

TEST_CASE("empirical measures store draws and average exactly") {
  analysis::EmpiricalMeasure mu(1, {1.0, 2.0, 3.0, 6.0}, 99);
  CHECK(mu.dim() == 1);
  CHECK(mu.size() == 4);
  CHECK(mu.seed() == 99);
  CHECK(mu.point(2)[0] == 3.0);
  CHECK_THROWS_AS(mu.point(4), InvalidParameter);

  const double mean = analysis::empirical_mean(
      mu, [](std::span<const double> x) { return x[0] * x[0]; });
  CHECK(mean == doctest::Approx((1.0 + 4.0 + 9.0 + 36.0) / 4.0).epsilon(1e-15));

  // Construction rejects incomplete or non-finite data.
  CHECK_THROWS_AS(analysis::EmpiricalMeasure(1, {}, 0), InvalidParameter);
  CHECK_THROWS_AS(analysis::EmpiricalMeasure(2, {1.0, 2.0, 3.0}, 0), InvalidParameter);
  CHECK_THROWS_AS(
      analysis::EmpiricalMeasure(1, {1.0, std::numeric_limits<double>::quiet_NaN()}, 0),
      InvalidParameter);

  // Draws are deterministic in the seed and tagged with it.
  auto f0 = targets::make_target("gaussian", 2);
  const auto a = analysis::EmpiricalMeasure::draw(f0, 5, 1234);
  const auto b = analysis::EmpiricalMeasure::draw(f0, 5, 1234);
  const auto c = analysis::EmpiricalMeasure::draw(f0, 5, 1235);
  CHECK(a.flat() == b.flat());
  CHECK(a.flat() != c.flat());
  CHECK(a.dim() == 2);
  CHECK(a.size() == 5);
  CHECK(a.seed() == 1234);
  CHECK_THROWS_AS(analysis::EmpiricalMeasure::draw(f0, 0, 1), InvalidParameter);
}

TEST_CASE("convolution agrees between the exact gaussian form and quadrature") {
  targets::TargetParams gp;
  gp.sigma = 1.0;
  gp.center = 0.3;
  auto f0 = targets::make_target("gaussian", 1, gp);
  auto kernel = kernels::make_kernel("gaussian", 1);
  const double nu = 1.7;
  const auto dilated = kernels::dilate(kernel, nu);

  // Exact form: N(center, sigma^2 + 1/nu^2) per axis.
  const auto conv = analysis::convolution(dilated, f0);
  const double var = 1.0 + 1.0 / (nu * nu);
  for (double x : {-1.0, 0.0, 0.4, 2.0}) {
    CHECK(conv(std::span<const double>(&x, 1)) ==
          doctest::Approx(normal_pdf_var(x, 0.3, var)).epsilon(1e-13));
  }

  // Stripping the mixture structure forces the numeric inner integral.
  auto plain = strip_structure(f0);
  const auto conv_numeric = analysis::convolution(dilated, plain, 1025);
  for (double x : {-1.0, 0.0, 0.4, 2.0}) {
    CHECK(conv_numeric(std::span<const double>(&x, 1)) ==
          doctest::Approx(normal_pdf_var(x, 0.3, var)).epsilon(1e-8));
  }

  // Heavy smoothing: phi_nu * f0 converges to f0 pointwise.
  const auto sharp = analysis::convolution(kernels::dilate(kernel, 64.0), f0);
  double x = 0.3;
  CHECK(sharp(std::span<const double>(&x, 1)) ==
        doctest::Approx(f0(std::span<const double>(&x, 1))).epsilon(1e-3));

  // The convolution of densities is a density bounded by the dilated sup norm.
  const auto mid = analysis::convolution(kernels::dilate(kernel, 3.0), f0);
  for (double xx : {-2.0, -0.5, 0.0, 0.3, 1.0, 4.0}) {
    const double v = mid(std::span<const double>(&xx, 1));
    CHECK(v >= 0.0);
    CHECK(v <= 3.0 / std::sqrt(2.0 * M_PI) + 1e-12);
  }

  CHECK_THROWS_AS(
      analysis::convolution(kernels::dilate(kernels::make_kernel("gaussian", 2), 1.0), f0),
      InvalidParameter);
}

TEST_CASE("smoothing error stays within its translation bound") {
  auto f0 = targets::make_target("gaussian", 1);
  for (const std::string kname : {"gaussian", "epanechnikov"}) {
    auto kernel = kernels::make_kernel(kname, 1);
    const auto quad = analysis::default_quadrature(kernel, f0, 1.0);
    double prev = mixrate::kInf;
    for (double nu : {1.0, 4.0, 16.0}) {
      const auto err = analysis::smoothing_error(f0, kernel, nu, 2.0, quad);
      CAPTURE(kname);
      CAPTURE(nu);
      CHECK(err.within_bound());
      CHECK(err.measured > 0.0);
      CHECK(err.measured < prev);  // finer kernels smooth less
      CHECK(err.alpha == doctest::Approx(1.0));
      CHECK(err.k2 == doctest::Approx(0.5 * std::pow(M_PI, -0.25)).epsilon(1e-12));
      if (kname == "gaussian")
        CHECK(err.k1 == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
      else
        CHECK(err.k1 == doctest::Approx(0.375).epsilon(1e-12));
      prev = err.measured;
    }
  }

  // A heavier-tailed target still satisfies the bound via its analytic K2.
  auto laplace = targets::make_target("laplace", 1);
  auto kernel = kernels::make_kernel("gaussian", 1);
  const auto lquad = analysis::default_quadrature(kernel, laplace, 1.0);
  const auto lerr = analysis::smoothing_error(laplace, kernel, 4.0, 2.0, lquad);
  CHECK(lerr.within_bound());
  CHECK(lerr.k2 == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(analysis::smoothing_error(f0, kernel, -1.0, 2.0, lquad),
                  InvalidParameter);
}

TEST_CASE("smoothing error refuses targets with no usable smoothness constant") {
  // A tabulated target carries no gradient, no fractional declaration, and no
  // explicit constant, so the ladder comes up empty.
  const auto tmp = std::filesystem::temp_directory_path() / "mixrate_test_analysis.csv";
  {
    std::ofstream out(tmp);
    out << "x,f\n0,0\n0.25,0.25\n0.5,0.5\n0.75,0.75\n1,1\n1.25,0.75\n1.5,0.5\n1.75,0.25\n2,0\n";
  }
  auto csv = targets::load_csv_target(tmp.string());
  auto kernel = kernels::make_kernel("gaussian", 1);
  const auto quad = box1(3.0, 1024);
  CHECK_THROWS_AS(analysis::smoothing_error(csv, kernel, 2.0, 2.0, quad), UnsupportedTarget);
  try {
    analysis::smoothing_error(csv, kernel, 2.0, 2.0, quad);
  } catch (const UnsupportedTarget& e) {
    const std::string msg = e.what();
    CHECK(msg.find("estimate_smoothness") != std::string::npos);
  }
}

TEST_CASE("default quadrature picks mode and resolution by dimension") {
  auto f1 = targets::make_target("gaussian", 1);
  auto k1 = kernels::make_kernel("gaussian", 1);
  const auto q1 = analysis::default_quadrature(k1, f1, 1.0);
  CHECK(q1.mode == analysis::QuadratureMode::tensor_grid);
  CHECK(q1.dim() == 1);
  CHECK(q1.points_per_axis == 4096);
  CHECK(q1.hi[0] == doctest::Approx(15.0));  // max(9, 9) + 6

  const auto q1_wide = analysis::default_quadrature(k1, f1, 0.5);
  CHECK(q1_wide.hi[0] == doctest::Approx(30.0));  // kernel support 18, margin 12

  auto f2 = targets::make_target("gaussian", 2);
  auto k2 = kernels::make_kernel("gaussian", 2);
  const auto q2 = analysis::default_quadrature(k2, f2, 1.0);
  CHECK(q2.mode == analysis::QuadratureMode::tensor_grid);
  CHECK(q2.points_per_axis == 256);

  auto f3 = targets::make_target("gaussian", 3);
  auto k3 = kernels::make_kernel("gaussian", 3);
  const auto q3 = analysis::default_quadrature(k3, f3, 1.0);
  CHECK(q3.mode == analysis::QuadratureMode::monte_carlo);
  CHECK(q3.sample_count == 65536);

  CHECK_THROWS_AS(analysis::default_quadrature(k1, f1, 0.0), InvalidParameter);
  CHECK_THROWS_AS(analysis::default_quadrature(k2, f1, 1.0), InvalidParameter);
}
