#pragma once

// Reference computations used only by the tests, written independently of the
// library code paths they validate.

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace oracles {

// Exhaustive minimum of w' G w - 2 w' b over the probability simplex,
// enumerated on the lattice w = k / steps with sum k = steps. The innermost
// coordinate pair is swept incrementally, so each lattice point costs O(1)
// after an O(m^2) setup per outer combination. Practical for m <= 4.
inline double brute_force_simplex_min(const Eigen::MatrixXd& gram, const Eigen::VectorXd& b,
                                      int steps) {
  const int m = static_cast<int>(gram.rows());
  const double n = static_cast<double>(steps);
  if (m == 1) return gram(0, 0) - 2.0 * b(0);

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> outer(static_cast<std::size_t>(m > 2 ? m - 2 : 0), 0);

  // Iterate all assignments of the first m-2 coordinates; the last two take
  // the remainder r, swept as (k, r - k).
  const auto sweep_last_pair = [&](const std::vector<int>& head, int remainder) {
    Eigen::VectorXd base =Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m - 2; ++i) base(i) = head[static_cast<std::size_t>(i)] / n;
    base(m - 1) = remainder / n;

    const Eigen::VectorXd gbase = gram * base;
    const double a0 = base.dot(gbase) - 2.0 * base.dot(b);
    // Along w(k) = base + (k/n)(e_{m-2} - e_{m-1}) the risk is quadratic in k.
    const double gu_base = gbase(m - 2) - gbase(m - 1);
    const double bu = b(m - 2) - b(m - 1);
    const double lin = 2.0 * (gu_base - bu) / n;
    const double quad_coeff =
        (gram(m - 2, m - 2) - 2.0 * gram(m - 2, m - 1) + gram(m - 1, m - 1)) / (n * n);
    for (int k = 0; k <= remainder; ++k) {
      const double kk = static_cast<double>(k);
      const double value = a0 + kk * lin + kk * kk * quad_coeff;
      if (value < best) best = value;
    }
  };

  if (m == 2) {
    sweep_last_pair({}, steps);
    return best;
  }

  // Odometer over the head coordinates with total at most `steps`.
  std::vector<int> head(static_cast<std::size_t>(m - 2), 0);
  while (true) {
    int used = 0;
    for (int v : head) used += v;
    if (used <= steps) sweep_last_pair(head, steps - used);

    int pos = m - 3;
    while (pos >= 0) {
      ++head[static_cast<std::size_t>(pos)];
      int total = 0;
      for (int v : head) total += v;
      if (total <= steps) break;
      head[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return best;
}

}  // namespace oracles
