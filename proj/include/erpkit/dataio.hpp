// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erpkit/tensor.hpp"

namespace erpkit {

/// Epoched ERP amplitudes, trials x channels x timepoints, in microvolts.
struct ErpDataset {
  Tensor data;
  double sampling_rate_hz = 250.0;
  double epoch_start_ms = -100.0;
  double epoch_end_ms = 700.0;

  std::size_t n_trials() const { return data.dim(0); }
  std::size_t n_channels() const { return data.dim(1); }
  std::size_t n_timepoints() const { return data.dim(2); }

  /// Milliseconds relative to word onset of sample `t`.
  double time_ms(std::size_t t) const { return epoch_start_ms + 1000.0 * static_cast<double>(t) / sampling_rate_hz; }

  /// Throws FormatError unless n_timepoints matches the epoch window and sampling rate.
  void validate() const;
};

enum class WordClass { kContent, kFunction };

std::string to_string(WordClass wc);
WordClass parse_word_class(const std::string& text);

struct TrialMeta {
  std::string subject_id;
  int sentence_id = 0;
  int word_position = 1;  // 1-based
  std::string token;
  WordClass word_class = WordClass::kContent;
  std::string pos_tag;
  bool artifact = false;
};

struct TokenKey {
  int sentence_id = 0;
  int word_position = 0;
  auto operator<=>(const TokenKey&) const = default;
};

std::string to_string(const TokenKey& key);

/// Tokens of every sentence, indexed by 1-based word position. Built from the full,
/// unfiltered metadata so preceding-context features can see first words.
class SentenceIndex {
 public:
  SentenceIndex() = default;
  explicit SentenceIndex(const std::vector<TrialMeta>& meta);

  /// Tokens at positions 1..position-1.
  std::vector<std::string> context_before(int sentence_id, int word_position) const;
  const std::string& token_at(int sentence_id, int word_position) const;
  bool contains(int sentence_id) const { return sentences_.count(sentence_id) > 0; }

 private:
  std::map<int, std::map<int, std::string>> sentences_;
};

struct EmbeddingTable {
  std::size_t dimension = 0;
  std::map<std::string, std::vector<double>> entries;
  std::vector<std::string> duplicate_tokens;  // tokens seen more than once; last occurrence kept

  const std::vector<double>* find(const std::string& token) const;
};

/// Per-token feature columns keyed by (sentence, position). Vector-valued columns have width > 1.
struct TokenFeatureTable {
  struct Column {
    std::string name;
    std::size_t width = 1;
  };

  std::vector<Column> columns;
  std::map<TokenKey, std::vector<double>> rows;  // concatenated column values

  std::size_t total_width() const;
  /// Offset and width of a named column; throws ConfigError if absent.
  std::pair<std::size_t, std::size_t> locate(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

using FrequencyCounts = std::map<std::string, double>;

struct FoldAssignment {
  std::size_t n_items = 0;
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;

  std::vector<std::size_t> test_items(std::size_t fold) const;
  std::vector<std::size_t> train_items(std::size_t fold) const;
};

struct TrainDevSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
};

// ERP files: <stem>.erp.json (sidecar) + <stem>.erp.bin (raw f64le, C order), plus
// <stem>.meta.tsv when metadata is supplied. `stem` may also be the sidecar path itself.
struct LoadedErp {
  ErpDataset dataset;
  std::vector<TrialMeta> meta;  // empty when no .meta.tsv exists
};

LoadedErp load_erp(const std::filesystem::path& stem);
void save_erp(const std::filesystem::path& stem, const ErpDataset& dataset, const std::vector<TrialMeta>* meta = nullptr);

std::vector<TrialMeta> load_meta(const std::filesystem::path& path);
void save_meta(const std::filesystem::path& path, const std::vector<TrialMeta>& meta);

struct FilteredTrials {
  ErpDataset dataset;
  std::vector<TrialMeta> meta;
  std::vector<std::size_t> kept;  // source row of each surviving trial
};

/// Drops artifact trials and, unless include_first_word, sentence-initial words.
FilteredTrials filter_artifacts(const ErpDataset& dataset, const std::vector<TrialMeta>& meta, bool include_first_word);

/// Subset of trials in the given order.
ErpDataset select_trials(const ErpDataset& dataset, const std::vector<std::size_t>& rows);

/// Shuffles 0..n-1 with a seeded generator, then deals items round-robin into k folds.
FoldAssignment kfold_split(std::size_t n_items, std::size_t k, std::uint64_t seed);
TrainDevSplit train_dev_split(const std::vector<std::size_t>& items, double dev_fraction, std::uint64_t seed);

EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

TokenFeatureTable load_token_features(const std::filesystem::path& path);
void save_token_features(const std::filesystem::path& path, const TokenFeatureTable& table);

FrequencyCounts load_counts(const std::filesystem::path& path);
void save_counts(const std::filesystem::path& path, const FrequencyCounts& counts);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);
double parse_double(const std::string& text, const std::string& where);

}  // namespace erpkit
