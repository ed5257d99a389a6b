// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "erpkit/tensor.hpp"

namespace erpkit {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2: grad += weight_decay * param before the moment update.
  double weight_decay = 0.0;
};

/// Moment estimates for one set of parameters.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step_count = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, const std::vector<Tensor*>& params);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace erpkit
