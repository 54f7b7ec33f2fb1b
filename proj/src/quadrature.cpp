#include "mixrate/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace mixrate::analysis {

namespace {

std::string format_point(std::span<const double> x) {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", x[i]);
    if (i) s += ", ";
    s += buf;
  }
  s += ")";
  return s;
}

[[noreturn]] void throw_nonfinite(std::span<const double> x, double v) {
  throw NumericalFailure("integrand returned non-finite value " + std::to_string(v) +
                         " at point " + format_point(x));
}

double tensor_integrate(const PointFn& f, const QuadratureSpec& quad) {
  const int d = quad.dim();
  std::vector<AxisRule> axes;
  axes.reserve(d);
  for (int i = 0; i < d; ++i) axes.push_back(axis_rule(quad.lo[i], quad.hi[i], quad.points_per_axis));

  const std::size_t n_inner = axes[d - 1].nodes.size();
  std::size_t n_outer = 1;
  for (int i = 0; i + 1 < d; ++i) n_outer *= axes[i].nodes.size();

  std::vector<double> x(d);
  // Row sums (innermost axis) are combined with an outer pairwise tree, so
  // the summation order is fixed regardless of caller threading.
  const double outer = pairwise_sum_fn(n_outer, [&](std::size_t row) {
    std::size_t rem = row;
    double w_outer = 1.0;
    for (int i = d - 2; i >= 0; --i) {
      const std::size_t k = rem % axes[i].nodes.size();
      rem /= axes[i].nodes.size();
      x[i] = axes[i].nodes[k];
      w_outer *= axes[i].weights[k];
    }
    const double row_sum = pairwise_sum_fn(n_inner, [&](std::size_t j) {
      x[d - 1] = axes[d - 1].nodes[j];
      const double v = f(x);
      if (!std::isfinite(v)) throw_nonfinite(x, v);
      return axes[d - 1].weights[j] * v;
    });
    return w_outer * row_sum;
  });
  return outer;
}

double monte_carlo_integrate(const PointFn& f, const QuadratureSpec& quad) {
  const int d = quad.dim();
  double volume = 1.0;
  for (int i = 0; i < d; ++i) volume *= quad.hi[i] - quad.lo[i];

  // Stratify on the largest lattice with at most sample_count cells; one
  // uniform draw per cell.
  long cells_per_axis = std::max<long>(
      1, static_cast<long>(std::floor(std::pow(static_cast<double>(quad.sample_count),
                                               1.0 / static_cast<double>(d)))));
  std::size_t n_cells = 1;
  for (int i = 0; i < d; ++i) n_cells *= static_cast<std::size_t>(cells_per_axis);

  std::mt19937_64 rng(quad.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> values(n_cells);
  std::vector<double> x(d);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rem = c;
    for (int i = 0; i < d; ++i) {
      const std::size_t k = rem % static_cast<std::size_t>(cells_per_axis);
      rem /= static_cast<std::size_t>(cells_per_axis);
      const double w = (quad.hi[i] - quad.lo[i]) / static_cast<double>(cells_per_axis);
      x[i] = quad.lo[i] + (static_cast<double>(k) + unif(rng)) * w;
    }
    const double v = f(x);
    if (!std::isfinite(v)) throw_nonfinite(x, v);
    values[c] = v;
  }
  return volume * pairwise_sum(values) / static_cast<double>(n_cells);
}

}  // namespace

void QuadratureSpec::validate() const {
  if (lo.empty() || lo.size() != hi.size())
    throw InvalidParameter("quadrature bounds must be non-empty and of equal length");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i]))
      throw InvalidParameter("quadrature bounds must satisfy lo < hi on axis " +
                             std::to_string(i));
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw InvalidParameter("quadrature bounds must be finite");
  }
  if (mode == QuadratureMode::tensor_grid && points_per_axis < 16)
    throw InvalidParameter("points_per_axis must be at least 16");
  if (mode == QuadratureMode::monte_carlo && sample_count < 16)
    throw InvalidParameter("sample_count must be at least 16");
}

QuadratureSpec QuadratureSpec::tensor(std::vector<double> lo, std::vector<double> hi,
                                      int points_per_axis) {
  QuadratureSpec q;
  q.mode = QuadratureMode::tensor_grid;
  q.lo = std::move(lo);
  q.hi = std::move(hi);
  q.points_per_axis = points_per_axis;
  q.validate();
  return q;
}

QuadratureSpec QuadratureSpec::symmetric_box(int dim, double radius, int points_per_axis) {
  if (dim < 1) throw InvalidParameter("dimension must be positive");
  if (!(radius > 0.0)) throw InvalidParameter("box radius must be positive");
  return tensor(std::vector<double>(dim, -radius), std::vector<double>(dim, radius),
                points_per_axis);
}

QuadratureSpec QuadratureSpec::monte_carlo_box(int dim, double radius, long sample_count,
                                               std::uint64_t seed) {
  if (dim < 1) throw InvalidParameter("dimension must be positive");
  if (!(radius > 0.0)) throw InvalidParameter("box radius must be positive");
  QuadratureSpec q;
  q.mode = QuadratureMode::monte_carlo;
  q.lo.assign(dim, -radius);
  q.hi.assign(dim, radius);
  q.sample_count = sample_count;
  q.seed = seed;
  q.validate();
  return q;
}

AxisRule axis_rule(double lo, double hi, int points) {
  AxisRule r;
  r.nodes.resize(points);
  r.weights.resize(points);
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (int j = 0; j < points; ++j) {
    r.nodes[j] = lo + h * static_cast<double>(j);
    r.weights[j] = (j == 0 || j == points - 1) ? 0.5 * h : h;
  }
  return r;
}

double integrate(const PointFn& f, const QuadratureSpec& quad) {
  quad.validate();
  if (quad.mode == QuadratureMode::tensor_grid) return tensor_integrate(f, quad);
  return monte_carlo_integrate(f, quad);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, int points) {
  if (points < 2) throw InvalidParameter("integrate_1d needs at least 2 points");
  const double h = (b - a) / static_cast<double>(points - 1);
  return pairwise_sum_fn(static_cast<std::size_t>(points), [&](std::size_t j) {
    const double x = a + h * static_cast<double>(j);
    const double w = (j == 0 || j + 1 == static_cast<std::size_t>(points)) ? 0.5 * h : h;
    const double v = f(x);
    if (!std::isfinite(v)) {
      const double p[1] = {x};
      throw NumericalFailure("integrand returned non-finite value at point (" +
                             std::to_string(p[0]) + ")");
    }
    return w * v;
  });
}

double simpson_1d(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double s = f(a) + f(b);
  for (int j = 1; j < intervals; ++j) {
    const double x = a + h * static_cast<double>(j);
    s += f(x) * ((j % 2) ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

}  // namespace mixrate::analysis
