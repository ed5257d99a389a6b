// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "erpkit/autoencoder.hpp"
#include "erpkit/checkpoint.hpp"
#include "erpkit/evaluate.hpp"
#include "erpkit/features.hpp"

namespace erpkit {

/// One linear map per latent channel: z[c, t] = weight[c, t, :] . f + bias[c, t].
struct InterfaceMap {
  Tensor weight;  // C_lat x T_lat x D_in
  Tensor bias;    // C_lat x T_lat

  std::size_t input_width() const { return weight.dim(2); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

Tensor apply_interface(const InterfaceMap& map, std::span<const double> features);

/// Single tanh hidden layer over the embedding block.
struct TunerConfig {
  bool enabled = true;  // only takes effect when the feature spec has an embedding source
  std::size_t hidden_size = 64;
};

struct EncodingModelSpec {
  FeatureSpec features;
  TunerConfig tuner;
};

struct EncodingModel {
  AutoencoderParams decoder;  // frozen
  std::string decoder_hash;
  std::string decoder_ref;    // where the decoder was loaded from, informational

  FeatureSpec features;
  std::vector<std::string> feature_names;
  std::size_t embedding_width = 0;
  Standardizer standardizer;

  bool tuner_enabled = false;
  Tensor tuner_weight;  // H x embedding_width
  Tensor tuner_bias;    // H

  InterfaceMap interface;
  double weight_decay = 0.0;

  /// Width of the raw (standardized) feature row the model consumes.
  std::size_t feature_width() const { return feature_names.size(); }
  std::vector<Tensor*> trainable_tensors();
};

/// Interface input for one standardized feature row: tuned embedding block, then scalars.
std::vector<double> interface_input(const EncodingModel& model, std::span<const double> features);

/// Latent code predicted from one standardized feature row.
Tensor predict_latent(const EncodingModel& model, std::span<const double> features);

/// decode(frozen decoder, interface(tuner(features))).
Tensor predict_erp(const EncodingModel& model, std::span<const double> features,
                   const std::optional<std::string>& subject_id = std::nullopt);

/// Fresh model around a frozen decoder. `features` is the raw assembled matrix, used for names/widths.
EncodingModel init_encoding_model(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                  const FeatureMatrix& features, std::uint64_t seed);

/// Gradient of the loss w.r.t. the trainable tensors, same shapes as the model's.
struct EncodingModelGrad {
  Tensor interface_weight;
  Tensor interface_bias;
  Tensor tuner_weight;
  Tensor tuner_bias;

  static EncodingModelGrad zeros_like(const EncodingModel& model);
};

/// MSE of one standardized row against `target`. Adds scale * d(MSE)/d(params) into `grad`;
/// the decoder receives no gradient.
double accumulate_row_gradient(const EncodingModel& model, std::span<const double> features, const Tensor& target,
                               const std::optional<std::string>& subject, double scale, EncodingModelGrad& grad);

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool restored_to_best = true;
};

struct TrainedEncodingModel {
  EncodingModel model;
  TrainHistory history;
};

/// Fits interface (and tuner) on `rows` of the dataset (all when empty). A dev split is carved
/// from those rows for early stopping; the standardizer is fitted on the remaining training rows.
/// `features` must be row-aligned with the dataset and unstandardized.
TrainedEncodingModel train_encoding_model(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                          const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                          const FeatureMatrix& features, const TrainConfig& config,
                                          const std::vector<std::size_t>& rows = {});

/// Predicted ERPs for the given rows (row-aligned with `features`), trials x channels x timepoints.
Tensor predict_rows(const EncodingModel& model, const FeatureMatrix& features, const std::vector<TrialMeta>& meta,
                    const std::vector<std::size_t>& rows);

/// Mean squared error of the model over `rows`.
double model_mse(const EncodingModel& model, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                 const FeatureMatrix& features, const std::vector<std::size_t>& rows);

Checkpoint to_checkpoint(const EncodingModel& model);
/// Rebuilds a model; the decoder comes from `decoder` and must match the recorded hash.
EncodingModel encoding_model_from_checkpoint(const Checkpoint& checkpoint, const AutoencoderParams& decoder);

struct WeightDecayCell {
  double weight_decay = 0.0;
  std::size_t fold = 0;
  double test_mse = 0.0;
};

struct WeightDecaySearch {
  double chosen = 0.0;
  std::vector<WeightDecayCell> table;  // |grid| x k, grid-major
  std::vector<double> mean_mse;        // per grid entry
  std::string fold_hash;
  std::vector<std::vector<double>> fold_test_mse;  // [grid][fold]
  std::vector<EncodingModel> fold_models;          // one per fold, at the chosen weight decay
};

/// Each trial predicted by the model whose fold held it out; trials x channels x timepoints.
Tensor out_of_fold_predictions(const std::vector<EncodingModel>& fold_models, const FoldAssignment& folds,
                               const FeatureMatrix& features, const std::vector<TrialMeta>& meta);

/// k-fold CV over the grid; chooses the lowest mean held-out MSE, ties to the smaller decay.
WeightDecaySearch weight_decay_search(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                      const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                      const FeatureMatrix& features, const std::vector<double>& grid,
                                      const FoldAssignment& folds, const TrainConfig& config);

std::string fold_assignment_hash(const FoldAssignment& folds);

struct SuiteEntry {
  std::string name;
  FeatureSpec spec;
};

/// The nine model variants compared in the suite: intercept baseline, frequency baseline,
/// single predictors, and their combinations.
std::vector<SuiteEntry> default_roster();

struct SuiteConfig {
  std::vector<SuiteEntry> roster = default_roster();
  std::vector<double> weight_decay_grid = {1e-5, 1e-3, 1e-1};
  std::size_t folds = 5;
  TrainConfig train;
  TunerConfig tuner;
  std::size_t n_boot = 10000;
  double alpha = 0.05;
};

struct SuiteInputs {
  const AutoencoderParams* decoder = nullptr;
  const ErpDataset* dataset = nullptr;        // filtered trials
  const std::vector<TrialMeta>* meta = nullptr;
  FeatureResources resources;
  /// Per-trial summed squared error of the autoencoder ceiling, row-aligned with the dataset.
  std::vector<double> ceiling_sse;
};

struct ModelResult {
  std::string name;
  std::string label;
  WeightDecaySearch search;
  EvalReport report;
};

struct SuiteResult {
  std::string fold_hash;
  FoldAssignment folds;
  std::vector<ModelResult> models;
  std::vector<std::string> skipped;
  const ModelResult* find(const std::string& name) const;
};

/// Trains every roster entry with one shared fold assignment and seed. An intercept-only
/// model is always fitted (added if the roster lacks one) because R^2_mod needs it.
SuiteResult run_model_suite(const SuiteConfig& config, const SuiteInputs& inputs);

}  // namespace erpkit
