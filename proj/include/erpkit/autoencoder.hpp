// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "erpkit/checkpoint.hpp"
#include "erpkit/dataio.hpp"
#include "erpkit/layers.hpp"
#include "erpkit/tensor.hpp"

namespace erpkit {

enum class Architecture { kAlpha, kBeta };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);

struct AutoencoderSpec {
  Architecture architecture = Architecture::kBeta;
  bool intercepts = false;
  std::size_t channels = 32;
  std::size_t timepoints = 200;

  std::string label() const;  // e.g. "beta" or "beta+intercepts"
};

enum class LayerKind { kConv, kPool, kConvTranspose };
enum class Activation { kNone, kTanh };

struct LayerDesc {
  LayerKind kind = LayerKind::kConv;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;  // pooling window for kPool
  std::size_t stride = 1;
  std::size_t padding = 0;
  Activation activation = Activation::kNone;
  std::size_t in_length = 0;
  std::size_t out_length = 0;

  bool has_params() const { return kind != LayerKind::kPool; }
};

struct LayerPlan {
  std::vector<LayerDesc> encoder;
  std::vector<LayerDesc> decoder;
  std::size_t latent_channels = 0;
  std::size_t latent_timepoints = 0;
};

// Beta, input C x T (T divisible by 10):
//   conv(C->16, k9, p4) tanh, pool(5,5), conv(16->10, k5, p2) tanh, pool(2,2)  => 10 x T/10
//   convT(10->16, k4, s2, p1) tanh, convT(16->C, k9, s5, p2) linear          => C x T
// Alpha, input C x T (T divisible by 20, T >= 40):
//   conv(C->12, k9, p4) tanh, pool(4,4), conv(12->5, k5, p2) tanh, pool(5,5),
//   conv(5->5, k2) tanh                                                       => 5 x (T/20 - 1)
//   convT(5->5, k2) tanh, convT(5->12, k9, s5, p2) tanh, convT(12->C, k8, s4, p2) linear
LayerPlan build_layer_plan(const AutoencoderSpec& spec);

struct ConvParams {
  Tensor kernels;
  Tensor bias;
};

/// Learned weights. `encoder`/`decoder` align with the plan's layer lists (pool entries stay empty).
struct AutoencoderParams {
  AutoencoderSpec spec;
  LayerPlan plan;
  std::vector<ConvParams> encoder;
  std::vector<ConvParams> decoder;
  bool has_encoder = true;
  std::vector<std::string> subjects;  // row order of `intercepts`
  Tensor intercepts;                  // subjects x channels, present iff spec.intercepts

  std::vector<Tensor*> decoder_tensors();
  std::vector<const Tensor*> decoder_tensors() const;
  std::vector<Tensor*> trainable_tensors();
  /// Row of `intercepts` for a subject; throws ConfigError if unknown.
  std::size_t subject_index(const std::string& subject_id) const;
};

/// Centered uniform init with bound 1/sqrt(fan_in); intercepts start at zero.
AutoencoderParams init_autoencoder(const AutoencoderSpec& spec, const std::vector<std::string>& subjects,
                                   std::uint64_t seed);

// Layer-stack execution with the activations kept for backprop.
struct StackTrace {
  std::vector<Tensor> inputs;
  std::vector<Tensor> outputs;  // post-activation
  std::vector<PoolResult> pools;
};

Tensor run_stack(const std::vector<LayerDesc>& layers, const std::vector<ConvParams>& params, const Tensor& x,
                 StackTrace* trace = nullptr);

/// Returns the gradient w.r.t. the stack input. Parameter gradients are accumulated into
/// `param_grads` (same layout as `params`) unless it is null, i.e. the stack is frozen.
Tensor backprop_stack(const std::vector<LayerDesc>& layers, const std::vector<ConvParams>& params,
                      const StackTrace& trace, const Tensor& upstream, std::vector<ConvParams>* param_grads);

Tensor encode(const AutoencoderParams& params, const Tensor& erp);
/// Adds the subject's intercept row when the model has intercepts; subject_id is then required.
Tensor decode(const AutoencoderParams& params, const Tensor& latent,
              const std::optional<std::string>& subject_id = std::nullopt);
Tensor reconstruct(const AutoencoderParams& params, const Tensor& erp,
                   const std::optional<std::string>& subject_id = std::nullopt);

Checkpoint to_checkpoint(const AutoencoderParams& params);
AutoencoderParams autoencoder_from_checkpoint(const Checkpoint& checkpoint);
/// Hash of the decoder tensors plus intercepts; the frozen-decoder contract compares these.
std::string decoder_hash(const AutoencoderParams& params);

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double dev_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double dev_mse = 0.0;
};

struct PretrainResult {
  AutoencoderParams params;  // restored to the best dev epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Minimizes reconstruction MSE. Uses `rows` of the dataset (all rows when empty); meta supplies subjects.
PretrainResult pretrain(const AutoencoderSpec& spec, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                        const TrainConfig& config, const std::vector<std::size_t>& rows = {});

/// Mean squared reconstruction error and pooled R^2 (1 - MSE / total variance) over `rows`.
struct ReconstructionScore {
  double mse = 0.0;
  double r2 = 0.0;
};
ReconstructionScore score_reconstruction(const AutoencoderParams& params, const ErpDataset& dataset,
                                         const std::vector<TrialMeta>& meta, const std::vector<std::size_t>& rows);
/// Per-trial reconstruction squared error summed over elements.
std::vector<double> reconstruction_sse(const AutoencoderParams& params, const ErpDataset& dataset,
                                       const std::vector<TrialMeta>& meta);

struct ArchitectureScore {
  AutoencoderSpec spec;
  std::vector<double> fold_mse;
  std::vector<double> fold_r2;
  double mean_mse = 0.0;
  double mean_r2 = 0.0;
};

struct SelectionReport {
  std::size_t k = 0;
  std::vector<ArchitectureScore> candidates;
  std::size_t winner = 0;  // lowest mean MSE
};

SelectionReport select_architecture(const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                                    const std::vector<AutoencoderSpec>& candidates, std::size_t k,
                                    const TrainConfig& config);

}  // namespace erpkit
