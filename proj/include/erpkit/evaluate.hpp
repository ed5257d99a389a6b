// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erpkit/dataio.hpp"
#include "erpkit/tensor.hpp"

namespace erpkit {

/// 1 - (mse_model - mse_autoencoder) / (mse_intercept - mse_autoencoder).
/// Throws ConfigError unless mse_intercept > mse_autoencoder.
double r2_mod(double mse_model, double mse_intercept, double mse_autoencoder);

struct Correlation {
  double r = 0.0;
  bool degenerate = false;  // zero variance on either side; r reported as 0
};

Correlation pearson(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  std::string model;
  double mse_model = 0.0;
  double mse_intercept = 0.0;
  double mse_autoencoder = 0.0;
  double r2_mod = 0.0;
  std::vector<double> fold_r2_mod;
  std::vector<double> fold_mse_model;
  std::vector<double> fold_mse_intercept;
  std::vector<double> fold_mse_autoencoder;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double weight_decay = 0.0;

  nlohmann::json to_json() const;
};

/// Builds a report from per-fold MSEs: r2_mod from the fold means, CI by bootstrap over fold r2_mod.
EvalReport make_report(const std::string& model, std::vector<double> fold_mse_model,
                       std::vector<double> fold_mse_intercept, std::vector<double> fold_mse_autoencoder,
                       std::size_t n_boot, double alpha, std::uint64_t seed);

struct TimecourseSeries {
  std::vector<double> values;       // r_model - r_intercept per timepoint
  std::vector<double> r_model;
  std::vector<double> r_intercept;
  std::vector<std::uint8_t> degenerate;
  std::vector<double> time_ms;
  std::size_t smoothing_window = 1;
  std::string pooling = "trials_x_channels";
};

/// Pearson r at each timepoint, pooled over trials and channels, minus the intercept model's r.
/// Inputs are trials x channels x timepoints.
TimecourseSeries timepoint_correlation_increase(const Tensor& model_preds, const Tensor& intercept_preds,
                                                const Tensor& actual, const ErpDataset* timing = nullptr);

/// Centered moving average; windows are truncated at the edges. Window must be odd.
std::vector<double> moving_average_smooth(std::span<const double> series, std::size_t window);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap of the mean of `values` (resampled with replacement).
ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t n_boot = 10000, double alpha = 0.05,
                                std::uint64_t seed = 0);

/// +1 / -1 coding of which feature families a model includes.
struct ModelCoding {
  int frequency = -1;
  int surprisal = -1;
  int semantic_distance = -1;
  int static_embedding = -1;
  int contextual_embedding = -1;
};

struct WordRow {
  std::string model;
  std::size_t trial = 0;
  TrialMeta meta;
  double r = 0.0;
  bool degenerate = false;
  ModelCoding coding;
};

struct WordLevelTable {
  std::vector<WordRow> rows;
};

struct TimeWindow {
  std::size_t first = 0;  // inclusive timepoint
  std::size_t last = 0;   // exclusive
};

/// Per-trial Pearson r between predicted and actual epochs, flattened over channels x time
/// (or only the timepoints in `window`).
WordLevelTable per_word_correlations(const std::string& model, const ModelCoding& coding, const Tensor& preds,
                                     const Tensor& actual, const std::vector<TrialMeta>& meta,
                                     std::optional<TimeWindow> window = std::nullopt);

struct ClassSummary {
  double mean_r = 0.0;
  std::size_t n = 0;
};

/// Mean r per word class ("content", "function"), keyed by model then class.
std::map<std::string, std::map<std::string, ClassSummary>> content_function_summary(const WordLevelTable& table);

void write_timecourse_tsv(const std::filesystem::path& path, const TimecourseSeries& series,
                          const std::vector<double>& smoothed);
void write_word_table_tsv(const std::filesystem::path& path, const WordLevelTable& table);

}  // namespace erpkit
