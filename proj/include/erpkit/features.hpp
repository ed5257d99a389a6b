// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "erpkit/dataio.hpp"

namespace erpkit {

enum class FeatureSource {
  kFrequency,
  kSurprisal,
  kSemanticDistance,
  kStaticEmbedding,
  kContextualEmbedding,
  kConstant,
  kTable,  // every column of a user-supplied token feature table, as scalar inputs
};

std::string to_string(FeatureSource source);
/// Accepts long names ("surprisal") and the short roster codes (F, S, SD, Static, Ctx, ...).
FeatureSource parse_feature_source(const std::string& text);
bool is_embedding(FeatureSource source);

/// Ordered list of feature sources for one model variant.
struct FeatureSpec {
  std::vector<FeatureSource> sources;

  /// Throws ConfigError for an empty spec, duplicates, or constant mixed with other sources.
  void validate() const;
  bool has(FeatureSource source) const;
  bool has_embedding() const;
  /// Short code such as "F+S+SD+Ctx", or "Intercept".
  std::string label() const;
};

/// Parses "F+S+SD" style or "frequency,surprisal" style specs.
FeatureSpec parse_feature_spec(const std::string& text);

/// Lookup tables a FeatureSpec can draw on. Pointers may be null when a source is unused.
struct FeatureResources {
  const FrequencyCounts* counts = nullptr;
  const TokenFeatureTable* lm_table = nullptr;  // surprisal and contextual embedding columns
  const EmbeddingTable* embeddings = nullptr;
  const SentenceIndex* sentences = nullptr;
  const TokenFeatureTable* custom_table = nullptr;
  std::string surprisal_column = "surprisal";
  std::string contextual_column = "contextual";
};

/// One source's columns before assembly.
struct FeatureBlock {
  std::vector<std::string> names;
  std::size_t n_rows = 0;
  std::vector<double> values;         // n_rows x names.size(), row-major
  std::vector<std::uint8_t> imputed;  // per row
  bool mean_impute = false;           // imputed rows are replaced by the training-row mean

  std::size_t width() const { return names.size(); }
};

// Add-one smoothed log relative frequency: log((count + 1) / (total + V)), V = table size.
std::vector<double> frequency_feature(std::span<const std::string> tokens, const FrequencyCounts& counts);

std::vector<double> surprisal_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table,
                                      const std::string& column = "surprisal");

/// 1 - cos(mean of preceding-word embeddings, target embedding). Out-of-vocabulary context
/// words are skipped; rows with no usable context or an OOV target are flagged for mean imputation.
FeatureBlock semantic_distance(std::span<const TrialMeta> trials, const EmbeddingTable& embeddings,
                               const SentenceIndex& sentences);

/// Raw embedding lookup; OOV tokens get a zero vector and an imputation flag.
FeatureBlock static_embedding_feature(std::span<const TrialMeta> trials, const EmbeddingTable& embeddings);

/// Per-token contextual vectors. The table producer is responsible for computing each row
/// from the sentence prefix ending at that word; the loader cannot verify it.
FeatureBlock contextual_embedding_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table,
                                          const std::string& column = "contextual");

/// All columns of a token feature table; names are "<column>" or "<column>.<k>".
FeatureBlock table_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<std::uint8_t> passthrough;  // zero-variance columns left as is
};

/// Trials x D model inputs. The embedding block (if any) occupies the leading columns.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::vector<std::string> names;
  std::vector<double> values;               // row-major
  std::vector<std::uint8_t> imputed;        // row-major mask
  std::vector<std::uint8_t> mean_impute;    // per column
  std::size_t embedding_width = 0;
  bool standardized = false;

  std::size_t n_cols() const { return names.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_cols(), n_cols()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_cols() + j]; }
  /// Rows in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
};

FeatureMatrix assemble(const FeatureSpec& spec, std::span<const TrialMeta> trials, const FeatureResources& resources);

/// Fits means and standard deviations on `training_rows` only; other rows are never read.
Standardizer fit_standardizer(const FeatureMatrix& matrix, std::span<const std::size_t> training_rows);
FeatureMatrix apply_standardizer(const FeatureMatrix& matrix, const Standardizer& standardizer);

}  // namespace erpkit
