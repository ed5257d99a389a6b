// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "erpkit/adam.hpp"
#include "erpkit/autoencoder.hpp"
#include "erpkit/detail/training_loop.hpp"
#include "erpkit/error.hpp"
#include "erpkit/log.hpp"

namespace erpkit {

namespace detail {

LoopResult run_epochs(const TrainConfig& config, std::span<const std::size_t> train_rows, bool have_dev,
                      const std::function<double(std::span<const std::size_t>)>& step,
                      const std::function<double()>& dev_mse, const std::function<void()>& save_best) {
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (train_rows.empty()) throw ConfigError("no training rows");
  LoopResult result;
  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  std::mt19937_64 rng(config.seed ^ 0x5eed5eed5eedULL);
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      sum += step(std::span<const std::size_t>(order.data() + start, end - start));
    }
    EpochRecord rec{epoch, sum / static_cast<double>(order.size()), 0.0};
    rec.dev_mse = have_dev ? dev_mse() : rec.train_mse;
    if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.dev_mse)) {
      throw DivergenceError("training diverged (non-finite loss) at epoch " + std::to_string(epoch), epoch);
    }
    result.history.push_back(rec);
    if (rec.dev_mse < best) {
      best = rec.dev_mse;
      result.best_epoch = epoch;
      save_best();
    }
    if (log::level() >= log::Level::kInfo && (epoch % 20 == 0 || epoch == config.epochs)) {
      log::info("epoch " + std::to_string(epoch) + " train " + std::to_string(rec.train_mse) + " dev " +
                std::to_string(rec.dev_mse));
    }
  }
  return result;
}

}  // namespace detail

namespace {

std::vector<std::string> subjects_of(const std::vector<TrialMeta>& meta) {
  std::set<std::string> ids;
  for (const auto& m : meta) ids.insert(m.subject_id);
  return {ids.begin(), ids.end()};
}

std::optional<std::string> subject_for(const AutoencoderParams& params, const std::vector<TrialMeta>& meta,
                                       std::size_t row) {
  if (!params.spec.intercepts) return std::nullopt;
  return meta.at(row).subject_id;
}

void check_geometry(const AutoencoderSpec& spec, const ErpDataset& dataset) {
  if (dataset.n_channels() != spec.channels || dataset.n_timepoints() != spec.timepoints) {
    throw ShapeError("dataset epochs are " + std::to_string(dataset.n_channels()) + "x" +
                     std::to_string(dataset.n_timepoints()) + ", autoencoder expects " + std::to_string(spec.channels) +
                     "x" + std::to_string(spec.timepoints));
  }
}

}  // namespace

PretrainResult pretrain(const AutoencoderSpec& spec, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                        const TrainConfig& config, const std::vector<std::size_t>& rows_in) {
  if (dataset.n_trials() == 0) throw ConfigError("pretrain: dataset is empty");
  check_geometry(spec, dataset);
  if (spec.intercepts && meta.size() != dataset.n_trials()) {
    throw ConfigError("pretrain with intercepts needs trial metadata for every trial");
  }
  std::vector<std::size_t> rows = rows_in;
  if (rows.empty()) {
    rows.resize(dataset.n_trials());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  const TrainDevSplit split = train_dev_split(rows, config.dev_fraction, config.seed);

  PretrainResult result;
  AutoencoderParams params = init_autoencoder(spec, subjects_of(meta), config.seed);
  AdamConfig adam_cfg{config.lr, 0.9, 0.999, 1e-8, config.weight_decay};
  std::vector<Tensor*> trainable = params.trainable_tensors();
  AdamState adam(adam_cfg, trainable);


  auto step = [&](std::span<const std::size_t> batch) {
    std::vector<ConvParams> enc_grads(params.encoder.size()), dec_grads(params.decoder.size());
    Tensor intercept_grads(params.intercepts.shape());
    double loss_sum = 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t row : batch) {
      const Tensor x = dataset.data.slice(row);
      StackTrace enc_trace, dec_trace;
      const Tensor z = run_stack(params.plan.encoder, params.encoder, x, &enc_trace);
      Tensor y = run_stack(params.plan.decoder, params.decoder, z, &dec_trace);
      std::size_t s_idx = 0;
      if (spec.intercepts) {
        s_idx = params.subject_index(meta[row].subject_id);
        for (std::size_t c = 0; c < y.dim(0); ++c) {
          for (std::size_t t = 0; t < y.dim(1); ++t) y.at(c, t) += params.intercepts.at(s_idx, c);
        }
      }
      LossResult loss = mse_loss(y, x);
      loss_sum += loss.value;
      loss.grad *= scale;
      if (spec.intercepts) {
        for (std::size_t c = 0; c < y.dim(0); ++c) {
          double acc = 0.0;
          for (std::size_t t = 0; t < y.dim(1); ++t) acc += loss.grad.at(c, t);
          intercept_grads.at(s_idx, c) += acc;
        }
      }
      const Tensor gz = backprop_stack(params.plan.decoder, params.decoder, dec_trace, loss.grad, &dec_grads);
      backprop_stack(params.plan.encoder, params.encoder, enc_trace, gz, &enc_grads);
    }
    std::vector<Tensor> grads;
    for (auto& g : enc_grads) {
      if (g.kernels.empty()) continue;
      grads.push_back(std::move(g.kernels));
      grads.push_back(std::move(g.bias));
    }
    for (auto& g : dec_grads) {
      if (g.kernels.empty()) continue;
      grads.push_back(std::move(g.kernels));
      grads.push_back(std::move(g.bias));
    }
    if (spec.intercepts) grads.push_back(std::move(intercept_grads));
    adam_step(trainable, grads, adam);
    return loss_sum;
  };

  auto dev_mse = [&] {
    double sum = 0.0;
    for (std::size_t row : split.dev) {
      const Tensor x = dataset.data.slice(row);
      sum += mse_loss(reconstruct(params, x, subject_for(params, meta, row)), x).value;
    }
    return sum / static_cast<double>(split.dev.size());
  };

  AutoencoderParams best = params;
  auto save_best = [&] { best = params; };
  detail::LoopResult loop = detail::run_epochs(config, split.train, !split.dev.empty(), step, dev_mse, save_best);
  result.params = std::move(best);
  result.history = std::move(loop.history);
  result.best_epoch = loop.best_epoch;
  return result;
}

std::vector<double> reconstruction_sse(const AutoencoderParams& params, const ErpDataset& dataset,
                                       const std::vector<TrialMeta>& meta) {
  check_geometry(params.spec, dataset);
  std::vector<double> sse(dataset.n_trials());
  for (std::size_t row = 0; row < dataset.n_trials(); ++row) {
    const Tensor x = dataset.data.slice(row);
    const Tensor y = reconstruct(params, x, subject_for(params, meta, row));
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (y[i] - x[i]) * (y[i] - x[i]);
    sse[row] = acc;
  }
  return sse;
}

ReconstructionScore score_reconstruction(const AutoencoderParams& params, const ErpDataset& dataset,
                                         const std::vector<TrialMeta>& meta, const std::vector<std::size_t>& rows) {
  check_geometry(params.spec, dataset);
  if (rows.empty()) throw ConfigError("score_reconstruction: no rows");
  const std::size_t per = dataset.n_channels() * dataset.n_timepoints();
  double sse = 0.0, sum = 0.0, sum_sq = 0.0;
  for (std::size_t row : rows) {
    const Tensor x = dataset.data.slice(row);
    const Tensor y = reconstruct(params, x, subject_for(params, meta, row));
    for (std::size_t i = 0; i < per; ++i) {
      sse += (y[i] - x[i]) * (y[i] - x[i]);
      sum += x[i];
      sum_sq += x[i] * x[i];
    }
  }
  const double n = static_cast<double>(rows.size() * per);
  const double mean = sum / n;
  const double variance = sum_sq / n - mean * mean;
  ReconstructionScore score;
  score.mse = sse / n;
  score.r2 = 1.0 - score.mse / variance;
  return score;
}

SelectionReport select_architecture(const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                    const std::vector<AutoencoderSpec>& candidates, std::size_t k,
                                    const TrainConfig& config) {
  if (candidates.empty()) throw ConfigError("select_architecture: no candidates");
  const FoldAssignment folds = kfold_split(dataset.n_trials(), k, config.seed);
  SelectionReport report;
  report.k = k;
  for (const auto& spec : candidates) {
    ArchitectureScore score;
    score.spec = spec;
    for (std::size_t fold = 0; fold < k; ++fold) {
      log::info("select-arch: " + spec.label() + " fold " + std::to_string(fold + 1) + "/" + std::to_string(k));
      const PretrainResult trained = pretrain(spec, dataset, meta, config, folds.train_items(fold));
      const ReconstructionScore s = score_reconstruction(trained.params, dataset, meta, folds.test_items(fold));
      score.fold_mse.push_back(s.mse);
      score.fold_r2.push_back(s.r2);
    }
    score.mean_mse = std::accumulate(score.fold_mse.begin(), score.fold_mse.end(), 0.0) / static_cast<double>(k);
    score.mean_r2 = std::accumulate(score.fold_r2.begin(), score.fold_r2.end(), 0.0) / static_cast<double>(k);
    report.candidates.push_back(std::move(score));
  }
  for (std::size_t i = 1; i < report.candidates.size(); ++i) {
    if (report.candidates[i].mean_mse < report.candidates[report.winner].mean_mse) report.winner = i;
  }
  return report;
}

}  // namespace erpkit
