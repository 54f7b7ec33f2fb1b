#pragma once

// Numerical integration over boxes. Two modes:
//   tensor_grid  - composite trapezoid on a uniform per-axis grid, summed
//                  with a fixed pairwise tree (deterministic, thread-safe).
//   monte_carlo  - seeded stratified sampling, intended for d >= 3.
// Accuracy is empirical; there are no guaranteed error bounds.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mixrate/common.hpp"

namespace mixrate::analysis {

enum class QuadratureMode { tensor_grid, monte_carlo };

using PointFn = std::function<double(std::span<const double>)>;

struct QuadratureSpec {
  QuadratureMode mode = QuadratureMode::tensor_grid;
  std::vector<double> lo;  // per-axis lower bounds
  std::vector<double> hi;  // per-axis upper bounds
  int points_per_axis = 4096;
  long sample_count = 65536;
  std::uint64_t seed = 1;

  int dim() const { return static_cast<int>(lo.size()); }

  // Throws InvalidParameter on unordered bounds or counts below 16.
  void validate() const;

  static QuadratureSpec tensor(std::vector<double> lo, std::vector<double> hi,
                               int points_per_axis);
  // [-radius, radius]^dim
  static QuadratureSpec symmetric_box(int dim, double radius, int points_per_axis);
  static QuadratureSpec monte_carlo_box(int dim, double radius, long sample_count,
                                        std::uint64_t seed);
};

// Integral of f over the box described by `quad`. Non-finite values of f raise
// NumericalFailure naming the offending point.
double integrate(const PointFn& f, const QuadratureSpec& quad);

// Composite trapezoid on [a, b] with `points` nodes, pairwise-summed.
double integrate_1d(const std::function<double(double)>& f, double a, double b, int points);

// Composite Simpson with `intervals` subintervals (rounded up to even).
double simpson_1d(const std::function<double(double)>& f, double a, double b, int intervals);

// Nodes and trapezoid weights of one tensor-grid axis.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
AxisRule axis_rule(double lo, double hi, int points);

}  // namespace mixrate::analysis
