// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace erpkit {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient of `f` at `point`.
std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps = 1e-5);

/// Compares `analytic` against central differences. The relative error of element i is
/// |a_i - n_i| / max(|n_i|, 1e-3 * max_j |n_j|, 1e-12), so entries that are tiny next to
/// the rest of the gradient are judged on the gradient's overall scale.
GradCheckResult finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                                        std::span<const double> analytic, double eps = 1e-5);

}  // namespace erpkit
