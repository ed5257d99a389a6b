// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace erpkit::testing {

ScratchDir::ScratchDir(const std::string& tag) {
  std::string pattern = (std::filesystem::temp_directory_path() / ("erpkit-" + tag + "-XXXXXX")).string();
  std::vector<char> buffer(pattern.begin(), pattern.end());
  buffer.push_back('\0');
  if (mkdtemp(buffer.data()) == nullptr) throw std::runtime_error("mkdtemp failed for " + pattern);
  path_ = buffer.data();
}

ScratchDir::~ScratchDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

FeatureResources Corpus::resources() const {
  FeatureResources r;
  r.counts = &synth.counts;
  r.lm_table = &synth.lm_table;
  r.embeddings = &synth.embeddings;
  r.sentences = &sentences;
  return r;
}

FeatureMatrix Corpus::features(const std::string& spec) const {
  return assemble(parse_feature_spec(spec), filtered.meta, resources());
}

std::vector<double> Corpus::ceiling_sse() const {
  const std::size_t n = filtered.dataset.n_trials();
  const std::size_t per = filtered.dataset.data.size() / n;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < per; ++j) {
      const double d = filtered.dataset.data[i * per + j] - truth.clean[i * per + j];
      out[i] += d * d;
    }
  }
  return out;
}

std::unique_ptr<Corpus> make_corpus(const SynthConfig& config) {
  auto c = std::make_unique<Corpus>();
  c->synth = generate(config);
  c->filtered = filter_artifacts(c->synth.dataset, c->synth.meta, false);
  c->truth = c->synth.truth.select_trials(c->filtered.kept);
  c->sentences = SentenceIndex(c->synth.meta);
  return c;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

SynthConfig small_synth_config(std::uint64_t seed) {
  SynthConfig c;
  c.n_subjects = 2;
  c.n_sentences = 20;
  c.words_per_sentence = 6;
  c.n_channels = 8;
  c.n_timepoints = 50;
  c.architecture = Architecture::kBeta;
  c.noise_sd = 0.3;
  c.artifact_rate = 0.0;
  c.seed = seed;
  return c;
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace erpkit::testing
