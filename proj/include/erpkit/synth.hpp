// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erpkit/autoencoder.hpp"
#include "erpkit/encoding_model.hpp"
#include "erpkit/features.hpp"

namespace erpkit {

struct SynthConfig {
  std::size_t n_subjects = 4;
  std::size_t n_sentences = 50;
  std::size_t words_per_sentence = 6;
  std::size_t n_channels = 32;
  std::size_t n_timepoints = 200;
  double sampling_rate_hz = 250.0;
  double epoch_start_ms = -100.0;
  Architecture architecture = Architecture::kBeta;
  bool intercepts = false;
  double subject_offset_sd = 0.0;  // per-subject channel offsets, only with intercepts

  double noise_sd = 1.0;
  /// When set, noise_sd is derived so that across-trial clean-signal variance / noise variance = snr.
  std::optional<double> snr;

  FeatureSpec drivers = FeatureSpec{{FeatureSource::kFrequency, FeatureSource::kSurprisal,
                                     FeatureSource::kSemanticDistance}};
  double weight_scale = 1.0;  // sd of the true interface weights
  double bias_scale = 0.5;    // sd of the true interface bias
  /// Latent timepoints whose receptive-field centre falls outside [first, last] ms get zero weights.
  std::optional<std::pair<double, double>> active_window_ms;

  std::size_t vocab_size = 80;
  double function_word_share = 0.35;
  std::size_t embedding_dim = 8;
  std::size_t contextual_dim = 12;
  double artifact_rate = 0.05;
  std::uint64_t seed = 0;

  double epoch_end_ms() const { return epoch_start_ms + 1000.0 * static_cast<double>(n_timepoints) / sampling_rate_hz; }
  std::size_t n_trials() const { return n_subjects * n_sentences * words_per_sentence; }
  /// Throws ConfigError on counts < 1, negative noise, or a geometry the architecture rejects.
  void validate() const;
};

/// Strict JSON reader: unknown keys are a ConfigError. Missing keys keep their defaults.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& config);

/// Standardized values of one driving feature source, trials x width.
struct DriverBlock {
  FeatureSource source = FeatureSource::kFrequency;
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t width() const { return names.size(); }
};

struct GroundTruth {
  AutoencoderParams decoder;     // has_encoder == false
  FeatureSpec drivers;
  std::vector<DriverBlock> blocks;  // in driver order
  InterfaceMap interface;           // input = blocks concatenated in driver order
  Tensor latents;                   // trials x C_lat x T_lat
  Tensor clean;                     // trials x channels x timepoints, decode(latents)
  double noise_sd = 0.0;

  double noise_variance() const { return noise_sd * noise_sd; }
  /// Concatenated driver values of one trial.
  std::vector<double> design_row(std::size_t trial) const;
  /// Row subset aligned with select_trials / filter_artifacts output.
  GroundTruth select_trials(std::span<const std::size_t> rows) const;
};

struct SynthOutput {
  ErpDataset dataset;
  std::vector<TrialMeta> meta;
  FrequencyCounts counts;
  EmbeddingTable embeddings;
  TokenFeatureTable lm_table;  // columns "surprisal" (1) and "contextual" (contextual_dim)
  GroundTruth truth;
};

/// Trials are ordered subject-major, then sentence, then position. Every subject reads the
/// same sentences. Content and function words differ in frequency, surprisal and embedding.
/// Driver values are standardized over non-initial words; sentence-initial words get zeros.
SynthOutput generate(const SynthConfig& config);

struct SubsetBound {
  std::string label;
  double latent_mse = 0.0;   // in-sample least-squares residual of the true latents on train rows
  double erp_mse = 0.0;      // held-out ERP MSE of the decoded projection
  double r2_mod = 0.0;
  bool ridge_fallback = false;
};

struct OracleBounds {
  double mse_floor = 0.0;       // held-out MSE of decode(true latents)
  double intercept_mse = 0.0;   // held-out MSE of the constant-only projection
  std::vector<SubsetBound> subsets;
};

/// Least-squares projection of the true latents on [1, subset drivers] fitted on `train_rows`,
/// decoded with the true decoder and scored on `test_rows`. A subset containing kConstant only
/// (or nothing) is the intercept model. Every subset source must be one of the drivers.
OracleBounds oracle_bounds(const GroundTruth& truth, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                           const std::vector<FeatureSpec>& subsets, const std::vector<std::size_t>& train_rows,
                           const std::vector<std::size_t>& test_rows);

}  // namespace erpkit
