// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "erpkit/synth.hpp"

namespace erpkit::testing {

/// Fresh empty directory under the system temp dir; removed by the destructor.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag);
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Synthetic corpus with first words and artifacts removed, as the pipeline sees it.
struct Corpus {
  SynthOutput synth;
  FilteredTrials filtered;
  GroundTruth truth;  // aligned with `filtered`
  SentenceIndex sentences;

  const ErpDataset& dataset() const { return filtered.dataset; }
  const std::vector<TrialMeta>& meta() const { return filtered.meta; }
  FeatureResources resources() const;
  /// Unstandardized feature matrix for a spec such as "F+S+SD".
  FeatureMatrix features(const std::string& spec) const;
  /// Per-trial summed squared error of the clean signal against the noisy data.
  std::vector<double> ceiling_sse() const;
};

std::unique_ptr<Corpus> make_corpus(const SynthConfig& config);

std::vector<std::size_t> iota_rows(std::size_t n);

/// Small beta-geometry corpus that trains in seconds: 8 channels x 50 timepoints.
SynthConfig small_synth_config(std::uint64_t seed);

/// Runs a shell command and returns its exit status (-1 if it did not exit normally).
int run_command(const std::string& command);

std::string read_file(const std::filesystem::path& path);

}  // namespace erpkit::testing
