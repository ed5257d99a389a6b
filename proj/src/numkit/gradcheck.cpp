// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "erpkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "erpkit/error.hpp"

namespace erpkit {

std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradCheckResult finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                                        std::span<const double> analytic, double eps) {
  if (analytic.size() != point.size()) {
    throw ShapeError("finite_difference_check: " + std::to_string(analytic.size()) + " analytic entries for " +
                     std::to_string(point.size()) + " coordinates");
  }
  const std::vector<double> numeric = numeric_gradient(f, point, eps);
  double scale = 0.0;
  for (double n : numeric) scale = std::max(scale, std::abs(n));
  const double floor = std::max(1e-3 * scale, 1e-12);

  GradCheckResult result;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double rel = std::abs(analytic[i] - numeric[i]) / std::max(std::abs(numeric[i]), floor);
    if (rel > result.max_rel_error || i == 0) {
      result.max_rel_error = std::max(result.max_rel_error, rel);
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric[i];
    }
  }
  return result;
}

}  // namespace erpkit
