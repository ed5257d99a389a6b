// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "erpkit/autoencoder.hpp"

namespace erpkit::detail {

struct LoopResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// Seeded per-epoch shuffle, mini-batches of config.batch_size, dev evaluation after every
// epoch and a snapshot whenever dev MSE improves (ties keep the earlier epoch). Without dev
// rows the epoch's training MSE is used for selection. Throws DivergenceError on NaN/Inf.
//
// `step` receives one batch of row indices, applies one optimizer update and returns the
// summed per-trial MSE of the batch before the update.
LoopResult run_epochs(const TrainConfig& config, std::span<const std::size_t> train_rows, bool have_dev,
                      const std::function<double(std::span<const std::size_t>)>& step,
                      const std::function<double()>& dev_mse, const std::function<void()>& save_best);

}  // namespace erpkit::detail
