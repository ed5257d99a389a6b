// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>

#include "erpkit/adam.hpp"
#include "erpkit/detail/training_loop.hpp"
#include "erpkit/encoding_model.hpp"
#include "erpkit/error.hpp"
#include "erpkit/log.hpp"

namespace erpkit {

EncodingModelGrad EncodingModelGrad::zeros_like(const EncodingModel& model) {
  return {Tensor(model.interface.weight.shape()), Tensor(model.interface.bias.shape()),
          Tensor(model.tuner_weight.shape()), Tensor(model.tuner_bias.shape())};
}

double accumulate_row_gradient(const EncodingModel& model, std::span<const double> features, const Tensor& target,
                               const std::optional<std::string>& subject, double scale, EncodingModelGrad& g) {
  const std::size_t e = model.embedding_width;
  Tensor block, hidden;
  std::vector<double> input;
  if (model.tuner_enabled) {
    block = Tensor({e}, std::vector<double>(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(e)));
    hidden = tanh_forward(dense_forward(block, model.tuner_weight, model.tuner_bias));
    input.assign(hidden.values().begin(), hidden.values().end());
    input.insert(input.end(), features.begin() + static_cast<std::ptrdiff_t>(e), features.end());
  } else {
    input.assign(features.begin(), features.end());
  }
  const Tensor z = apply_interface(model.interface, input);

  const AutoencoderParams& dec = model.decoder;
  StackTrace trace;
  Tensor y = run_stack(dec.plan.decoder, dec.decoder, z, &trace);
  if (dec.spec.intercepts) {
    const std::size_t s = dec.subject_index(subject.value());
    for (std::size_t c = 0; c < y.dim(0); ++c) {
      for (std::size_t t = 0; t < y.dim(1); ++t) y.at(c, t) += dec.intercepts.at(s, c);
    }
  }
  LossResult loss = mse_loss(y, target);
  loss.grad *= scale;
  const Tensor gz = backprop_stack(dec.plan.decoder, dec.decoder, trace, loss.grad, nullptr);

  const std::size_t d = input.size();
  std::vector<double> g_input(d, 0.0);
  for (std::size_t u = 0; u < gz.size(); ++u) {
    const double gu = gz[u];
    g.interface_bias[u] += gu;
    double* gw = g.interface_weight.data() + u * d;
    const double* w = model.interface.weight.data() + u * d;
    for (std::size_t j = 0; j < d; ++j) {
      gw[j] += gu * input[j];
      g_input[j] += gu * w[j];
    }
  }
  if (model.tuner_enabled) {
    const std::size_t h = hidden.size();
    const Tensor g_hidden({h}, std::vector<double>(g_input.begin(), g_input.begin() + static_cast<std::ptrdiff_t>(h)));
    const Tensor g_pre = tanh_backward(hidden, g_hidden);
    const LayerGrad lg = dense_backward(block, model.tuner_weight, g_pre);
    g.tuner_weight += lg.param("weight");
    g.tuner_bias += lg.param("bias");
  }
  return loss.value;
}

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

TrainedEncodingModel train_encoding_model(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                          const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                          const FeatureMatrix& features, const TrainConfig& config,
                                          const std::vector<std::size_t>& rows_in) {
  if (features.standardized) throw ConfigError("train_encoding_model expects unstandardized features");
  if (features.n_rows != dataset.n_trials()) {
    throw ShapeError("feature matrix has " + std::to_string(features.n_rows) + " rows, dataset has " +
                     std::to_string(dataset.n_trials()) + " trials");
  }
  if (dataset.n_channels() != decoder.spec.channels || dataset.n_timepoints() != decoder.spec.timepoints) {
    throw ShapeError("dataset epochs do not match the decoder geometry");
  }
  if (decoder.spec.intercepts && meta.size() != dataset.n_trials()) {
    throw ConfigError("a decoder with intercepts needs trial metadata for every trial");
  }
  const std::vector<std::size_t> rows = rows_in.empty() ? all_rows(dataset.n_trials()) : rows_in;
  const TrainDevSplit split = train_dev_split(rows, config.dev_fraction, config.seed);

  EncodingModel model = init_encoding_model(decoder, spec, features, config.seed);
  model.weight_decay = config.weight_decay;
  model.standardizer = fit_standardizer(features, split.train);
  const FeatureMatrix z_features = apply_standardizer(features, model.standardizer);
  const std::string hash_before = model.decoder_hash;

  auto subject_of = [&](std::size_t row) -> std::optional<std::string> {
    if (!decoder.spec.intercepts) return std::nullopt;
    return meta[row].subject_id;
  };

  std::vector<Tensor*> trainable = model.trainable_tensors();
  AdamState adam(AdamConfig{config.lr, 0.9, 0.999, 1e-8, config.weight_decay}, trainable);

  auto step = [&](std::span<const std::size_t> batch) {
    EncodingModelGrad g = EncodingModelGrad::zeros_like(model);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss_sum = 0.0;
    for (std::size_t row : batch) {
      loss_sum += accumulate_row_gradient(model, z_features.row(row), dataset.data.slice(row), subject_of(row), scale, g);
    }
    std::vector<Tensor> grads{std::move(g.interface_weight), std::move(g.interface_bias)};
    if (model.tuner_enabled) {
      grads.push_back(std::move(g.tuner_weight));
      grads.push_back(std::move(g.tuner_bias));
    }
    adam_step(trainable, grads, adam);
    return loss_sum;
  };

  auto dev_mse = [&] {
    double sum = 0.0;
    for (std::size_t row : split.dev) {
      sum += mse_loss(predict_erp(model, z_features.row(row), subject_of(row)), dataset.data.slice(row)).value;
    }
    return sum / static_cast<double>(split.dev.size());
  };

  EncodingModel best = model;
  auto save_best = [&] {
    best.interface = model.interface;
    best.tuner_weight = model.tuner_weight;
    best.tuner_bias = model.tuner_bias;
  };
  detail::LoopResult loop = detail::run_epochs(config, split.train, !split.dev.empty(), step, dev_mse, save_best);

  if (decoder_hash(model.decoder) != hash_before) {
    throw Error("frozen decoder changed during encoding-model training");
  }
  TrainedEncodingModel out;
  out.model = std::move(best);
  out.history.epochs = std::move(loop.history);
  out.history.best_epoch = loop.best_epoch;
  out.history.restored_to_best = true;
  return out;
}

std::string fold_assignment_hash(const FoldAssignment& folds) {
  std::string text = std::to_string(folds.n_items) + ":" + std::to_string(folds.k) + ":";
  for (std::size_t f : folds.fold_of) text += std::to_string(f) + ",";
  return sha256_hex(text);
}

WeightDecaySearch weight_decay_search(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                      const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                      const FeatureMatrix& features, const std::vector<double>& grid,
                                      const FoldAssignment& folds, const TrainConfig& config) {
  if (grid.empty()) throw ConfigError("weight decay grid is empty");
  if (folds.n_items != dataset.n_trials()) throw ConfigError("fold assignment does not cover the dataset");
  WeightDecaySearch search;
  search.fold_hash = fold_assignment_hash(folds);
  std::vector<std::vector<EncodingModel>> models(grid.size());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    TrainConfig cfg = config;
    cfg.weight_decay = grid[gi];
    search.fold_test_mse.emplace_back();
    for (std::size_t fold = 0; fold < folds.k; ++fold) {
      log::info("fit " + spec.features.label() + " wd " + format_double(grid[gi]) + " fold " +
                std::to_string(fold + 1) + "/" + std::to_string(folds.k));
      TrainedEncodingModel trained =
          train_encoding_model(decoder, spec, dataset, meta, features, cfg, folds.train_items(fold));
      const double mse = model_mse(trained.model, dataset, meta, features, folds.test_items(fold));
      search.table.push_back({grid[gi], fold, mse});
      search.fold_test_mse.back().push_back(mse);
      models[gi].push_back(std::move(trained.model));
    }
    const auto& f = search.fold_test_mse.back();
    search.mean_mse.push_back(std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size()));
  }
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi) {
    const bool lower = search.mean_mse[gi] < search.mean_mse[best];
    const bool tie_smaller = search.mean_mse[gi] == search.mean_mse[best] && grid[gi] < grid[best];
    if (lower || tie_smaller) best = gi;
  }
  search.chosen = grid[best];

  search.fold_models = std::move(models[best]);
  return search;
}

Tensor out_of_fold_predictions(const std::vector<EncodingModel>& fold_models, const FoldAssignment& folds,
                               const FeatureMatrix& features, const std::vector<TrialMeta>& meta) {
  if (fold_models.size() != folds.k) throw ConfigError("need one model per fold");
  if (features.n_rows != folds.n_items) throw ShapeError("fold assignment does not cover the feature rows");
  const AutoencoderSpec& spec = fold_models.front().decoder.spec;
  Tensor out({folds.n_items, spec.channels, spec.timepoints});
  for (std::size_t fold = 0; fold < folds.k; ++fold) {
    const std::vector<std::size_t> test = folds.test_items(fold);
    const Tensor preds = predict_rows(fold_models[fold], features, meta, test);
    for (std::size_t i = 0; i < test.size(); ++i) out.set_slice(test[i], preds.slice(i));
  }
  return out;
}

}  // namespace erpkit
