// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "erpkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "erpkit/error.hpp"

namespace erpkit {

std::string to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::kFrequency: return "frequency";
    case FeatureSource::kSurprisal: return "surprisal";
    case FeatureSource::kSemanticDistance: return "semantic_distance";
    case FeatureSource::kStaticEmbedding: return "static_embedding";
    case FeatureSource::kContextualEmbedding: return "contextual_embedding";
    case FeatureSource::kConstant: return "constant";
    case FeatureSource::kTable: return "table";
  }
  return "unknown";
}

namespace {

std::string short_code(FeatureSource source) {
  switch (source) {
    case FeatureSource::kFrequency: return "F";
    case FeatureSource::kSurprisal: return "S";
    case FeatureSource::kSemanticDistance: return "SD";
    case FeatureSource::kStaticEmbedding: return "Static";
    case FeatureSource::kContextualEmbedding: return "Ctx";
    case FeatureSource::kConstant: return "Intercept";
    case FeatureSource::kTable: return "Table";
  }
  return "?";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

FeatureSource parse_feature_source(const std::string& text) {
  const std::string t = lower(text);
  if (t == "f" || t == "freq" || t == "frequency") return FeatureSource::kFrequency;
  if (t == "s" || t == "surp" || t == "surprisal") return FeatureSource::kSurprisal;
  if (t == "sd" || t == "semdis" || t == "semantic_distance") return FeatureSource::kSemanticDistance;
  if (t == "static" || t == "glove" || t == "static_embedding") return FeatureSource::kStaticEmbedding;
  if (t == "ctx" || t == "elmo" || t == "contextual" || t == "contextual_embedding") {
    return FeatureSource::kContextualEmbedding;
  }
  if (t == "intercept" || t == "constant" || t == "const") return FeatureSource::kConstant;
  if (t == "table") return FeatureSource::kTable;
  throw ConfigError("unknown feature source '" + text + "'");
}

bool is_embedding(FeatureSource source) {
  return source == FeatureSource::kStaticEmbedding || source == FeatureSource::kContextualEmbedding;
}

void FeatureSpec::validate() const {
  if (sources.empty()) throw ConfigError("feature spec needs at least one source");
  std::set<FeatureSource> seen;
  for (FeatureSource s : sources) {
    if (!seen.insert(s).second) throw ConfigError("feature source '" + to_string(s) + "' listed twice");
  }
  if (has(FeatureSource::kConstant) && sources.size() > 1) {
    throw ConfigError("the constant (intercept) source cannot be combined with other sources");
  }
}

bool FeatureSpec::has(FeatureSource source) const {
  return std::find(sources.begin(), sources.end(), source) != sources.end();
}

bool FeatureSpec::has_embedding() const { return std::any_of(sources.begin(), sources.end(), is_embedding); }

std::string FeatureSpec::label() const {
  std::string out;
  for (FeatureSource s : sources) out += (out.empty() ? "" : "+") + short_code(s);
  return out;
}

FeatureSpec parse_feature_spec(const std::string& text) {
  FeatureSpec spec;
  std::string current;
  for (char c : text + "+") {
    if (c == '+' || c == ',') {
      if (!current.empty()) spec.sources.push_back(parse_feature_source(current));
      current.clear();
    } else if (c != ' ') {
      current += c;
    }
  }
  spec.validate();
  return spec;
}

std::vector<double> frequency_feature(std::span<const std::string> tokens, const FrequencyCounts& counts) {
  if (counts.empty()) throw ConfigError("frequency_feature: counts table is empty");
  double total = 0.0;
  for (const auto& [token, c] : counts) total += c;
  const double denom = total + static_cast<double>(counts.size());
  std::vector<double> out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) {
    auto it = counts.find(token);
    const double c = it == counts.end() ? 0.0 : it->second;
    out.push_back(std::log((c + 1.0) / denom));
  }
  return out;
}

std::vector<double> surprisal_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table,
                                      const std::string& column) {
  const auto [offset, width] = table.locate(column);
  if (width != 1) throw ConfigError("surprisal column '" + column + "' must be scalar");
  std::vector<double> out;
  out.reserve(trials.size());
  std::vector<std::string> missing;
  std::size_t n_missing = 0;
  for (const auto& m : trials) {
    const TokenKey key{m.sentence_id, m.word_position};
    auto it = table.rows.find(key);
    if (it == table.rows.end()) {
      if (missing.size() < 5) missing.push_back(to_string(key));
      ++n_missing;
      out.push_back(0.0);
      continue;
    }
    const double s = it->second[offset];
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw FormatError("surprisal at " + to_string(key) + " is " + format_double(s) + "; must be finite and >= 0");
    }
    out.push_back(s);
  }
  if (n_missing > 0) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw FormatError("surprisal table lacks " + std::to_string(n_missing) + " trial keys, first: " + list);
  }
  return out;
}

namespace {

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

const std::vector<double>* usable(const EmbeddingTable& table, const std::string& token) {
  const auto* vec = table.find(token);
  if (vec == nullptr || norm(*vec) == 0.0) return nullptr;
  return vec;
}

void fill_provisional_mean(FeatureBlock& block) {
  const std::size_t w = block.width();
  for (std::size_t j = 0; j < w; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < block.n_rows; ++i) {
      if (!block.imputed[i]) {
        sum += block.values[i * w + j];
        ++n;
      }
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (std::size_t i = 0; i < block.n_rows; ++i) {
      if (block.imputed[i]) block.values[i * w + j] = mean;
    }
  }
}

}  // namespace

FeatureBlock semantic_distance(std::span<const TrialMeta> trials, const EmbeddingTable& embeddings,
                               const SentenceIndex& sentences) {
  FeatureBlock block{{"semantic_distance"}, trials.size(), std::vector<double>(trials.size()),
                     std::vector<std::uint8_t>(trials.size()), true};
  const std::size_t dim = embeddings.dimension;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TrialMeta& m = trials[i];
    if (m.word_position < 2) {
      throw ConfigError("semantic_distance needs preceding context; trial " + std::to_string(i) +
                        " is sentence-initial (exclude first words first)");
    }
    const auto* target = usable(embeddings, m.token);
    std::vector<double> context(dim, 0.0);
    std::size_t n_context = 0;
    for (const auto& word : sentences.context_before(m.sentence_id, m.word_position)) {
      const auto* vec = usable(embeddings, word);
      if (vec == nullptr) continue;
      for (std::size_t d = 0; d < dim; ++d) context[d] += (*vec)[d];
      ++n_context;
    }
    for (double& c : context) c /= static_cast<double>(std::max<std::size_t>(n_context, 1));
    const double context_norm = norm(context);
    if (target == nullptr || n_context == 0 || context_norm == 0.0) {
      block.imputed[i] = 1;
      continue;
    }
    const double cosine = dot(context, *target) / (context_norm * norm(*target));
    block.values[i] = std::clamp(1.0 - cosine, 0.0, 2.0);
  }
  fill_provisional_mean(block);
  return block;
}

FeatureBlock static_embedding_feature(std::span<const TrialMeta> trials, const EmbeddingTable& embeddings) {
  const std::size_t dim = embeddings.dimension;
  FeatureBlock block;
  for (std::size_t d = 0; d < dim; ++d) block.names.push_back("static." + std::to_string(d));
  block.n_rows = trials.size();
  block.values.assign(trials.size() * dim, 0.0);
  block.imputed.assign(trials.size(), 0);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto* vec = embeddings.find(trials[i].token);
    if (vec == nullptr) {
      block.imputed[i] = 1;
      continue;
    }
    std::copy(vec->begin(), vec->end(), block.values.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return block;
}

FeatureBlock contextual_embedding_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table,
                                          const std::string& column) {
  const auto [offset, width] = table.locate(column);
  FeatureBlock block;
  for (std::size_t d = 0; d < width; ++d) block.names.push_back(column + "." + std::to_string(d));
  block.n_rows = trials.size();
  block.values.assign(trials.size() * width, 0.0);
  block.imputed.assign(trials.size(), 0);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TokenKey key{trials[i].sentence_id, trials[i].word_position};
    auto it = table.rows.find(key);
    if (it == table.rows.end()) throw FormatError("contextual embedding table has no row for " + to_string(key));
    std::copy(it->second.begin() + static_cast<std::ptrdiff_t>(offset),
              it->second.begin() + static_cast<std::ptrdiff_t>(offset + width),
              block.values.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return block;
}

FeatureBlock table_feature(std::span<const TrialMeta> trials, const TokenFeatureTable& table) {
  FeatureBlock block;
  for (const auto& c : table.columns) {
    if (c.width == 1) {
      block.names.push_back(c.name);
    } else {
      for (std::size_t d = 0; d < c.width; ++d) block.names.push_back(c.name + "." + std::to_string(d));
    }
  }
  const std::size_t width = block.width();
  block.n_rows = trials.size();
  block.values.assign(trials.size() * width, 0.0);
  block.imputed.assign(trials.size(), 0);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TokenKey key{trials[i].sentence_id, trials[i].word_position};
    auto it = table.rows.find(key);
    if (it == table.rows.end()) throw FormatError("feature table has no row for " + to_string(key));
    std::copy(it->second.begin(), it->second.end(), block.values.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return block;
}

namespace {

FeatureBlock scalar_block(std::string name, std::vector<double> values) {
  const std::size_t n = values.size();
  return FeatureBlock{{std::move(name)}, n, std::move(values), std::vector<std::uint8_t>(n), false};
}

template <typename T>
const T& need(const T* ptr, FeatureSource source) {
  if (ptr == nullptr) throw ConfigError("feature source '" + to_string(source) + "' has no input table");
  return *ptr;
}

FeatureBlock build_block(FeatureSource source, std::span<const TrialMeta> trials, const FeatureResources& r) {
  switch (source) {
    case FeatureSource::kFrequency: {
      std::vector<std::string> tokens;
      tokens.reserve(trials.size());
      for (const auto& m : trials) tokens.push_back(m.token);
      return scalar_block("frequency", frequency_feature(tokens, need(r.counts, source)));
    }
    case FeatureSource::kSurprisal:
      return scalar_block("surprisal", surprisal_feature(trials, need(r.lm_table, source), r.surprisal_column));
    case FeatureSource::kSemanticDistance:
      return semantic_distance(trials, need(r.embeddings, source), need(r.sentences, source));
    case FeatureSource::kStaticEmbedding:
      return static_embedding_feature(trials, need(r.embeddings, source));
    case FeatureSource::kContextualEmbedding:
      return contextual_embedding_feature(trials, need(r.lm_table, source), r.contextual_column);
    case FeatureSource::kConstant:
      return scalar_block("constant", std::vector<double>(trials.size(), 1.0));
    case FeatureSource::kTable:
      return table_feature(trials, need(r.custom_table, source));
  }
  throw ConfigError("unhandled feature source");
}

}  // namespace

FeatureMatrix assemble(const FeatureSpec& spec, std::span<const TrialMeta> trials, const FeatureResources& resources) {
  spec.validate();
  // embedding block first, scalar features after it
  std::vector<FeatureSource> order;
  for (FeatureSource s : spec.sources) {
    if (is_embedding(s)) order.push_back(s);
  }
  for (FeatureSource s : spec.sources) {
    if (!is_embedding(s)) order.push_back(s);
  }

  std::vector<FeatureBlock> blocks;
  FeatureMatrix m;
  m.n_rows = trials.size();
  for (FeatureSource s : order) {
    blocks.push_back(build_block(s, trials, resources));
    const FeatureBlock& b = blocks.back();
    m.names.insert(m.names.end(), b.names.begin(), b.names.end());
    m.mean_impute.insert(m.mean_impute.end(), b.width(), b.mean_impute ? 1 : 0);
    if (is_embedding(s)) m.embedding_width += b.width();
  }
  const std::size_t cols = m.n_cols();
  m.values.assign(m.n_rows * cols, 0.0);
  m.imputed.assign(m.n_rows * cols, 0);
  std::size_t col0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < m.n_rows; ++i) {
      for (std::size_t j = 0; j < b.width(); ++j) {
        m.values[i * cols + col0 + j] = b.values[i * b.width() + j];
        m.imputed[i * cols + col0 + j] = b.imputed[i];
      }
    }
    col0 += b.width();
  }
  for (double v : m.values) {
    if (!std::isfinite(v)) throw FormatError("feature assembly produced a non-finite value");
  }
  return m;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.n_rows = rows.size();
  out.names = names;
  out.mean_impute = mean_impute;
  out.embedding_width = embedding_width;
  out.standardized = standardized;
  const std::size_t cols = n_cols();
  out.values.reserve(rows.size() * cols);
  out.imputed.reserve(rows.size() * cols);
  for (std::size_t r : rows) {
    if (r >= n_rows) throw ShapeError("FeatureMatrix::select_rows: row " + std::to_string(r) + " out of range");
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    out.imputed.insert(out.imputed.end(), imputed.begin() + static_cast<std::ptrdiff_t>(r * cols),
                       imputed.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  }
  return out;
}

Standardizer fit_standardizer(const FeatureMatrix& matrix, std::span<const std::size_t> training_rows) {
  const std::size_t cols = matrix.n_cols();
  Standardizer st{std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0), std::vector<std::uint8_t>(cols, 0)};
  for (std::size_t j = 0; j < cols; ++j) {
    const bool skip_imputed = matrix.mean_impute[j] != 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r : training_rows) {
      if (skip_imputed && matrix.imputed[r * cols + j]) continue;
      sum += matrix.at(r, j);
      ++n;
    }
    if (n == 0) {
      st.passthrough[j] = 1;
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r : training_rows) {
      if (skip_imputed && matrix.imputed[r * cols + j]) continue;
      const double d = matrix.at(r, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      st.passthrough[j] = 1;  // constant column
      continue;
    }
    st.mean[j] = mean;
    st.sd[j] = sd;
  }
  return st;
}

FeatureMatrix apply_standardizer(const FeatureMatrix& matrix, const Standardizer& st) {
  const std::size_t cols = matrix.n_cols();
  if (st.mean.size() != cols) {
    throw ShapeError("standardizer fitted on " + std::to_string(st.mean.size()) + " columns, matrix has " +
                     std::to_string(cols));
  }
  FeatureMatrix out = matrix;
  for (std::size_t i = 0; i < out.n_rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (st.passthrough[j]) continue;
      double& v = out.values[i * cols + j];
      if (out.mean_impute[j] && out.imputed[i * cols + j]) {
        v = 0.0;
      } else {
        v = (v - st.mean[j]) / st.sd[j];
      }
    }
  }
  out.standardized = true;
  return out;
}

}  // namespace erpkit
