// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "erpkit/error.hpp"
#include "erpkit/evaluate.hpp"

namespace erpkit {

double r2_mod(double mse_model, double mse_intercept, double mse_autoencoder) {
  const double denom = mse_intercept - mse_autoencoder;
  if (!(denom > 0.0)) {
    throw ConfigError("r2_mod: intercept MSE " + format_double(mse_intercept) +
                      " must exceed the autoencoder ceiling MSE " + format_double(mse_autoencoder));
  }
  return 1.0 - (mse_model - mse_autoencoder) / denom;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("pearson: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " values");
  }
  const double n = static_cast<double>(x.size());
  if (x.empty()) return {0.0, true};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

TimecourseSeries timepoint_correlation_increase(const Tensor& model_preds, const Tensor& intercept_preds,
                                                const Tensor& actual, const ErpDataset* timing) {
  require_same_shape(model_preds, actual, "timepoint_correlation_increase (model)");
  require_same_shape(intercept_preds, actual, "timepoint_correlation_increase (intercept)");
  if (actual.rank() != 3) throw ShapeError("timecourse inputs must be trials x channels x timepoints");
  const std::size_t n = actual.dim(0), c = actual.dim(1), t_len = actual.dim(2);
  TimecourseSeries series;
  std::vector<double> pm(n * c), pi(n * c), ya(n * c);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        pm[i * c + ch] = model_preds.at(i, ch, t);
        pi[i * c + ch] = intercept_preds.at(i, ch, t);
        ya[i * c + ch] = actual.at(i, ch, t);
      }
    }
    const Correlation rm = pearson(pm, ya);
    const Correlation ri = pearson(pi, ya);
    series.r_model.push_back(rm.r);
    series.r_intercept.push_back(ri.r);
    series.values.push_back(rm.r - ri.r);
    series.degenerate.push_back(rm.degenerate || ri.degenerate ? 1 : 0);
    series.time_ms.push_back(timing != nullptr ? timing->time_ms(t) : static_cast<double>(t));
  }
  return series;
}

std::vector<double> moving_average_smooth(std::span<const double> series, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ConfigError("smoothing window must be odd and >= 1, got " + std::to_string(window));
  }
  const std::size_t half = window / 2;
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(series.size(), i + half + 1);
    double sum = 0.0;
    for (std::size_t j = lo; j < hi; ++j) sum += series[j];
    out[i] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t n_boot, double alpha, std::uint64_t seed) {
  if (values.size() < 2) throw ConfigError("bootstrap_ci needs at least 2 values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("bootstrap_ci: alpha must lie in (0, 1)");
  if (n_boot < 1) throw ConfigError("bootstrap_ci: n_boot must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(n_boot);
  // offsets from values[0] keep resamples of equal values exactly equal to that value
  const double origin = values[0];
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[pick(rng)] - origin;
    m = origin + sum / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

WordLevelTable per_word_correlations(const std::string& model, const ModelCoding& coding, const Tensor& preds,
                                     const Tensor& actual, const std::vector<TrialMeta>& meta,
                                     std::optional<TimeWindow> window) {
  require_same_shape(preds, actual, "per_word_correlations");
  if (actual.rank() != 3) throw ShapeError("per_word_correlations inputs must be trials x channels x timepoints");
  if (meta.size() != actual.dim(0)) {
    throw ShapeError("per_word_correlations: " + std::to_string(meta.size()) + " metadata rows for " +
                     std::to_string(actual.dim(0)) + " trials");
  }
  const std::size_t c = actual.dim(1), t_len = actual.dim(2);
  const TimeWindow w = window.value_or(TimeWindow{0, t_len});
  if (w.first >= w.last || w.last > t_len) throw ConfigError("per_word_correlations: empty or out-of-range window");
  WordLevelTable table;
  std::vector<double> p, y;
  for (std::size_t i = 0; i < actual.dim(0); ++i) {
    p.clear();
    y.clear();
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t t = w.first; t < w.last; ++t) {
        p.push_back(preds.at(i, ch, t));
        y.push_back(actual.at(i, ch, t));
      }
    }
    const Correlation r = pearson(p, y);
    table.rows.push_back({model, i, meta[i], r.r, r.degenerate, coding});
  }
  return table;
}

std::map<std::string, std::map<std::string, ClassSummary>> content_function_summary(const WordLevelTable& table) {
  std::map<std::string, std::map<std::string, ClassSummary>> out;
  for (const auto& row : table.rows) {
    ClassSummary& s = out[row.model][to_string(row.meta.word_class)];
    s.mean_r += row.r;
    s.n += 1;
  }
  for (auto& [model, classes] : out) {
    for (auto& [cls, s] : classes) s.mean_r /= static_cast<double>(s.n);
  }
  return out;
}

}  // namespace erpkit
