// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "erpkit/dataio.hpp"
#include "erpkit/error.hpp"

namespace erpkit {

std::vector<std::size_t> FoldAssignment::test_items(std::size_t fold) const {
  std::vector<std::size_t> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (fold_of[i] == fold) items.push_back(i);
  }
  return items;
}

std::vector<std::size_t> FoldAssignment::train_items(std::size_t fold) const {
  std::vector<std::size_t> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (fold_of[i] != fold) items.push_back(i);
  }
  return items;
}

FoldAssignment kfold_split(std::size_t n_items, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold_split: k must be at least 2, got " + std::to_string(k));
  if (k > n_items) {
    throw ConfigError("kfold_split: k = " + std::to_string(k) + " exceeds n_items = " + std::to_string(n_items));
  }
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment folds{n_items, k, std::vector<std::size_t>(n_items)};
  for (std::size_t i = 0; i < n_items; ++i) folds.fold_of[order[i]] = i % k;
  return folds;
}

TrainDevSplit train_dev_split(const std::vector<std::size_t>& items, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) {
    throw ConfigError("dev_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order = items;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_dev = static_cast<std::size_t>(std::round(dev_fraction * static_cast<double>(items.size())));
  if (dev_fraction > 0.0 && n_dev == 0 && items.size() > 1) n_dev = 1;
  TrainDevSplit split;
  split.dev.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace erpkit
