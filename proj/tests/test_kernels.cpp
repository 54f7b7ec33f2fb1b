#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <span>
#include <vector>

#include "doctest.h"
#include "mixrate/kernels.hpp"
#include "mixrate/quadrature.hpp"

using mixrate::InvalidParameter;
using mixrate::NumericalFailure;
using mixrate::UnsupportedKernel;
using mixrate::analysis::QuadratureSpec;
namespace kernels = mixrate::kernels;

namespace {

const std::vector<std::string> kCatalogue = {"gaussian", "uniform", "triangular",
                                             "epanechnikov"};

QuadratureSpec box1(double radius, int points) {
  return QuadratureSpec::symmetric_box(1, radius, points);
}

double eval1(const kernels::KernelDensity& k, double t) {
  return k(std::span<const double>(&t, 1));
}

}  // namespace

TEST_CASE("catalogue factory builds named kernels and rejects unknown names") {
  for (const auto& name : kCatalogue) {
    auto k = kernels::make_kernel(name, 2);
    CHECK(k.name() == name);
    CHECK(k.dim() == 2);
    CHECK(k.symmetric());
    CHECK(k.is_product());
    CHECK(k.vc_dim() == doctest::Approx(kernels::kDefaultVcDim));
  }
  CHECK_THROWS_AS(kernels::make_kernel("cosine", 1), UnsupportedKernel);
  CHECK_THROWS_AS(kernels::make_kernel("gaussian", 0), InvalidParameter);
  try {
    kernels::make_kernel("cosine", 1);
  } catch (const UnsupportedKernel& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cosine") != std::string::npos);
    CHECK(msg.find("gaussian|uniform|triangular|epanechnikov") != std::string::npos);
  }
}

TEST_CASE("each catalogue kernel integrates to one") {
  // Odd node count puts the midpoint kinks of the compact profiles on-grid,
  // so the trapezoid rule is exact for the triangular kernel.
  for (const auto& name : kCatalogue) {
    auto k = kernels::make_kernel(name, 1);
    const double r = k.axis_effective_radius();
    const double mass = mixrate::analysis::integrate(
        [&](std::span<const double> x) { return k(x); }, box1(r, 65537));
    CAPTURE(name);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("dilation rescales Lp norms by nu^(d/q)") {
  for (const auto& name : kCatalogue) {
    auto k = kernels::make_kernel(name, 1);
    const double base_r = k.axis_effective_radius();
    for (double nu : {0.25, 1.0, 4.0}) {
      for (double p : {1.5, 2.0, 3.0}) {
        const double q = p / (p - 1.0);
        const double expected = std::pow(nu, 1.0 / q) * *k.lp_norm_hook(p);
        const double numeric = kernels::dilated_lp_norm(k, nu, p, box1(base_r / nu, 32769));
        CAPTURE(name);
        CAPTURE(nu);
        CAPTURE(p);
        CHECK(numeric == doctest::Approx(expected).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("closed-form Lp norms match frozen values") {
  auto gaussian = kernels::make_kernel("gaussian", 1);
  auto uniform = kernels::make_kernel("uniform", 1);
  auto triangular = kernels::make_kernel("triangular", 1);
  auto epanechnikov = kernels::make_kernel("epanechnikov", 1);

  // ||phi||_2 for the standard normal is (4 pi)^(-1/4).
  CHECK(*gaussian.lp_norm_hook(2.0) == doctest::Approx(0.5311259660135984).epsilon(1e-12));
  // The unit-mass box on [-1/2, 1/2] has every Lp norm equal to 1.
  CHECK(*uniform.lp_norm_hook(1.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*uniform.lp_norm_hook(3.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Tent on [-1, 1]: ||phi||_p = (2/(p+1))^(1/p).
  CHECK(*triangular.lp_norm_hook(2.0) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  // Parabolic profile: ||phi||_2^2 = 3/5.
  const double e2 = *epanechnikov.lp_norm_hook(2.0);
  CHECK(e2 * e2 == doctest::Approx(0.6).epsilon(1e-12));

  // d-dimensional hooks are per-axis products.
  auto g3 = kernels::make_kernel("gaussian", 3);
  CHECK(*g3.lp_norm_hook(2.0) ==
        doctest::Approx(std::pow(0.5311259660135984, 3)).epsilon(1e-10));

  // Hooks agree with direct quadrature of |phi|^p.
  for (const auto& name : kCatalogue) {
    auto k = kernels::make_kernel(name, 1);
    for (double p : {1.5, 2.5}) {
      const double numeric =
          kernels::dilated_lp_norm(k, 1.0, p, box1(k.axis_effective_radius(), 32769));
      CAPTURE(name);
      CAPTURE(p);
      CHECK(numeric == doctest::Approx(*k.lp_norm_hook(p)).epsilon(1e-6));
    }
  }
}

TEST_CASE("self-convolution hooks match direct integrals and known values") {
  const std::vector<double> zero = {0.0};
  QuadratureSpec dummy = box1(1.0, 16);

  // (phi * phi)(0) = ||phi||_2^2.
  auto gaussian = kernels::make_kernel("gaussian", 1);
  auto uniform = kernels::make_kernel("uniform", 1);
  auto triangular = kernels::make_kernel("triangular", 1);
  auto epanechnikov = kernels::make_kernel("epanechnikov", 1);
  CHECK(kernels::self_convolution(gaussian, 1.0, zero, dummy) ==
        doctest::Approx(0.28209479177387814).epsilon(1e-12));
  CHECK(kernels::self_convolution(uniform, 1.0, zero, dummy) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kernels::self_convolution(triangular, 1.0, zero, dummy) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(kernels::self_convolution(epanechnikov, 1.0, zero, dummy) ==
        doctest::Approx(0.6).epsilon(1e-12));

  // Compact kernels vanish beyond twice their support.
  const std::vector<double> two = {2.0};
  const std::vector<double> one = {1.0};
  CHECK(kernels::self_convolution(epanechnikov, 1.0, two, dummy) == 0.0);
  CHECK(kernels::self_convolution(uniform, 1.0, one, dummy) == 0.0);

  // Hooks agree with an independent trapezoid integral of phi(t) phi(t - delta).
  for (const auto& name : kCatalogue) {
    auto k = kernels::make_kernel(name, 1);
    const double r = k.axis_effective_radius();
    for (double delta : {0.15, 0.6, 1.3}) {
      const std::vector<double> d = {delta};
      const double hook = kernels::self_convolution(k, 1.0, d, dummy);
      const double direct = mixrate::analysis::integrate_1d(
          [&](double t) { return eval1(k, t) * eval1(k, t - delta); }, -r - 0.5,
          r + delta + 0.5, 65537);
      CAPTURE(name);
      CAPTURE(delta);
      // The box-kernel product integrand is discontinuous, so the reference
      // trapezoid integral only reaches O(h) accuracy there.
      const double tol = (name == "uniform") ? 1e-4 : 2e-7;
      CHECK(hook == doctest::Approx(direct).epsilon(tol));
    }
  }

  // Dilation: (phi_nu * phi_nu)(delta) = nu^d (phi * phi)(nu delta).
  const std::vector<double> d03 = {0.3};
  const double expected_dilated =
      2.5 * std::exp(-0.25 * 0.75 * 0.75) / std::sqrt(4.0 * M_PI);
  CHECK(kernels::self_convolution(gaussian, 2.5, d03, dummy) ==
        doctest::Approx(expected_dilated).epsilon(1e-12));

  // Product structure in d = 2.
  auto g2 = kernels::make_kernel("gaussian", 2);
  const std::vector<double> d2 = {0.5, -0.25};
  const auto conv1 = [](double t) { return std::exp(-0.25 * t * t) / std::sqrt(4.0 * M_PI); };
  const double expected2 = 1.5 * 1.5 * conv1(1.5 * 0.5) * conv1(1.5 * -0.25);
  CHECK(kernels::self_convolution(g2, 1.5, d2, QuadratureSpec::symmetric_box(2, 1.0, 16)) ==
        doctest::Approx(expected2).epsilon(1e-12));

  // Kernels without hooks fall back to quadrature over the supplied box.
  auto custom = kernels::KernelDensity::custom(
      "custom_gaussian", 1,
      [](std::span<const double> x) {
        return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2.0 * M_PI);
      },
      1.0 / std::sqrt(2.0 * M_PI), mixrate::kInf, kernels::kDefaultVcDim, true);
  const std::vector<double> d04 = {0.4};
  const double expected_custom = std::exp(-0.25 * 0.16) / std::sqrt(4.0 * M_PI);
  CHECK(kernels::self_convolution(custom, 1.0, d04, box1(12.0, 8193)) ==
        doctest::Approx(expected_custom).epsilon(1e-6));

  // Asymmetric kernels are rejected.
  auto asym = kernels::KernelDensity::custom(
      "one_sided", 1,
      [](std::span<const double> x) { return x[0] >= 0.0 && x[0] <= 1.0 ? 1.0 : 0.0; }, 1.0,
      1.0, kernels::kDefaultVcDim, false);
  CHECK_THROWS_AS(kernels::self_convolution(asym, 1.0, d04, dummy), UnsupportedKernel);
}

TEST_CASE("absolute moments match closed forms and scale with dilation") {
  QuadratureSpec dummy = box1(1.0, 16);
  auto gaussian = kernels::make_kernel("gaussian", 1);
  // E|Z| = sqrt(2/pi), E|Z|^2 = 1.
  CHECK(kernels::kernel_moment(gaussian, 1.0, dummy) ==
        doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
  CHECK(kernels::kernel_moment(gaussian, 2.0, dummy) == doctest::Approx(1.0).epsilon(1e-12));
  // In d = 2 the l2 moment is a chi moment: E||Z||_2 = sqrt(pi/2).
  auto g2 = kernels::make_kernel("gaussian", 2);
  CHECK(kernels::kernel_moment(g2, 1.0, QuadratureSpec::symmetric_box(2, 1.0, 16)) ==
        doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-12));

  auto uniform = kernels::make_kernel("uniform", 1);
  CHECK(kernels::kernel_moment(uniform, 0.7, dummy) ==
        doctest::Approx(std::pow(2.0, -0.7) / 1.7).epsilon(1e-12));
  auto triangular = kernels::make_kernel("triangular", 1);
  CHECK(kernels::kernel_moment(triangular, 1.0, dummy) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  auto epanechnikov = kernels::make_kernel("epanechnikov", 1);
  CHECK(kernels::kernel_moment(epanechnikov, 2.0, dummy) ==
        doctest::Approx(0.2).epsilon(1e-12));

  // The quadrature path (no hook) reproduces the triangular closed form.
  auto custom_tri = kernels::KernelDensity::custom(
      "custom_triangular", 1,
      [](std::span<const double> x) { return std::max(0.0, 1.0 - std::abs(x[0])); }, 1.0, 1.0,
      kernels::kDefaultVcDim, true);
  const double numeric = kernels::kernel_moment(custom_tri, 0.7, box1(1.0, 16385));
  CHECK(numeric == doctest::Approx(2.0 / (1.7 * 2.7)).epsilon(1e-5));

  // Dilated moments scale as nu^(-alpha).
  kernels::DilatedKernel dk(gaussian, 3.0);
  const double dilated_moment = mixrate::analysis::integrate(
      [&](std::span<const double> x) { return std::abs(x[0]) * dk(x); }, box1(3.5, 8193));
  CHECK(dilated_moment == doctest::Approx(std::sqrt(2.0 / M_PI) / 3.0).epsilon(1e-6));

  // Invalid order.
  CHECK_THROWS_AS(kernels::kernel_moment(gaussian, 0.0, dummy), InvalidParameter);

  // Heavy tails are detected: the first absolute moment of a Cauchy-like
  // profile keeps growing with the box.
  auto cauchy = kernels::KernelDensity::custom(
      "cauchy_like", 1,
      [](std::span<const double> x) { return 1.0 / (M_PI * (1.0 + x[0] * x[0])); },
      1.0 / M_PI, mixrate::kInf, kernels::kDefaultVcDim, true);
  CHECK_THROWS_AS(kernels::kernel_moment(cauchy, 1.0, box1(20.0, 4097)), NumericalFailure);
}

TEST_CASE("dilated kernels evaluate as scaled translates") {
  auto gaussian = kernels::make_kernel("gaussian", 1);
  kernels::DilatedKernel g2x(gaussian, 2.0);
  const double expected =
      2.0 * std::exp(-0.5 * 0.6 * 0.6) / std::sqrt(2.0 * M_PI);
  double x = 0.3;
  CHECK(g2x(std::span<const double>(&x, 1)) == doctest::Approx(expected).epsilon(1e-14));

  auto uniform = kernels::make_kernel("uniform", 1);
  kernels::DilatedKernel u4(uniform, 4.0);
  x = 0.2;
  CHECK(u4(std::span<const double>(&x, 1)) == 0.0);
  x = 0.1;
  CHECK(u4(std::span<const double>(&x, 1)) == doctest::Approx(4.0).epsilon(1e-14));

  auto epan2 = kernels::make_kernel("epanechnikov", 2);
  kernels::DilatedKernel e06(epan2, 0.6);
  CHECK(e06.sup_norm() == doctest::Approx(0.36 * 0.5625).epsilon(1e-14));
  CHECK(e06.dim() == 2);

  auto tri2 = kernels::make_kernel("triangular", 2);
  kernels::DilatedKernel t2(tri2, 2.0);
  CHECK(t2.support_radius() == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(t2.axis_effective_radius() == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(kernels::DilatedKernel(gaussian, 0.0), InvalidParameter);
  std::vector<double> wrong = {0.1, 0.2};
  CHECK_THROWS_AS(gaussian(wrong), InvalidParameter);
}

TEST_CASE("custom kernels validate construction parameters") {
  auto ok_eval = [](std::span<const double>) { return 1.0; };
  CHECK_THROWS_AS(kernels::KernelDensity::custom("bad", 1, nullptr, 1.0, 1.0, 8.0, true),
                  InvalidParameter);
  CHECK_THROWS_AS(kernels::KernelDensity::custom("bad", 0, ok_eval, 1.0, 1.0, 8.0, true),
                  InvalidParameter);
  CHECK_THROWS_AS(kernels::KernelDensity::custom("bad", 1, ok_eval, 1.0, 1.0, 0.0, true),
                  InvalidParameter);
  auto k = kernels::make_kernel("gaussian", 1);
  CHECK_THROWS_AS(k.set_vc_dim(-1.0), InvalidParameter);
  k.set_vc_dim(4.0);
  CHECK(k.vc_dim() == doctest::Approx(4.0));
}
