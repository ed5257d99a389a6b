// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "erpkit/dataio.hpp"
#include "erpkit/error.hpp"
#include "erpkit/detail/io_util.hpp"

namespace erpkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDtype = "f64le";

fs::path erp_stem(const fs::path& path) {
  const std::string s = path.string();
  for (const char* suffix : {".erp.json", ".erp.bin", ".meta.tsv"}) {
    const std::string suf(suffix);
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
      return fs::path(s.substr(0, s.size() - suf.size()));
    }
  }
  return path;
}

const std::vector<std::string> kMetaColumns = {"subject_id", "sentence_id", "word_position", "token",
                                               "word_class", "pos_tag",     "artifact"};

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") return true;
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") return false;
  throw FormatError(where + ": expected boolean, got '" + text + "'");
}

}  // namespace

void ErpDataset::validate() const {
  if (data.rank() != 3) {
    throw FormatError("ERP data must be trials x channels x timepoints, got " + shape_to_string(data.shape()));
  }
  if (!(sampling_rate_hz > 0.0) || !(epoch_end_ms > epoch_start_ms)) {
    throw FormatError("ERP sampling metadata invalid: rate " + format_double(sampling_rate_hz) + " Hz, epoch " +
                      format_double(epoch_start_ms) + ".." + format_double(epoch_end_ms) + " ms");
  }
  const double expected = std::round((epoch_end_ms - epoch_start_ms) / 1000.0 * sampling_rate_hz);
  if (static_cast<double>(n_timepoints()) != expected) {
    throw FormatError("ERP epoch " + format_double(epoch_start_ms) + ".." + format_double(epoch_end_ms) + " ms at " +
                      format_double(sampling_rate_hz) + " Hz implies " + format_double(expected) +
                      " timepoints, data has " + std::to_string(n_timepoints()));
  }
}

std::string to_string(WordClass wc) { return wc == WordClass::kContent ? "content" : "function"; }

WordClass parse_word_class(const std::string& text) {
  if (text == "content") return WordClass::kContent;
  if (text == "function") return WordClass::kFunction;
  throw FormatError("word_class must be 'content' or 'function', got '" + text + "'");
}

std::string to_string(const TokenKey& key) {
  return "(" + std::to_string(key.sentence_id) + "," + std::to_string(key.word_position) + ")";
}

SentenceIndex::SentenceIndex(const std::vector<TrialMeta>& meta) {
  for (const auto& m : meta) {
    auto& sentence = sentences_[m.sentence_id];
    auto [it, inserted] = sentence.emplace(m.word_position, m.token);
    if (!inserted && it->second != m.token) {
      throw FormatError("sentence " + std::to_string(m.sentence_id) + " position " + std::to_string(m.word_position) +
                        " has conflicting tokens '" + it->second + "' and '" + m.token + "'");
    }
  }
}

std::vector<std::string> SentenceIndex::context_before(int sentence_id, int word_position) const {
  std::vector<std::string> context;
  for (int pos = 1; pos < word_position; ++pos) context.push_back(token_at(sentence_id, pos));
  return context;
}

const std::string& SentenceIndex::token_at(int sentence_id, int word_position) const {
  auto s = sentences_.find(sentence_id);
  if (s != sentences_.end()) {
    auto w = s->second.find(word_position);
    if (w != s->second.end()) return w->second;
  }
  throw FormatError("no token for sentence " + std::to_string(sentence_id) + " position " +
                    std::to_string(word_position) + " in metadata");
}

LoadedErp load_erp(const fs::path& path) {
  const fs::path stem = erp_stem(path);
  const fs::path sidecar = stem.string() + ".erp.json";
  const fs::path payload = stem.string() + ".erp.bin";

  json header;
  try {
    header = json::parse(detail::read_text_file(sidecar));
  } catch (const json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  LoadedErp loaded;
  ErpDataset& ds = loaded.dataset;
  Shape shape;
  try {
    if (header.at("dtype").get<std::string>() != kDtype) {
      throw FormatError(sidecar.string() + ": unsupported dtype '" + header.at("dtype").get<std::string>() + "'");
    }
    shape = header.at("shape").get<Shape>();
    ds.sampling_rate_hz = header.at("sampling_rate_hz").get<double>();
    ds.epoch_start_ms = header.at("epoch_start_ms").get<double>();
    ds.epoch_end_ms = header.at("epoch_end_ms").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  if (shape.size() != 3) throw FormatError(sidecar.string() + ": shape must have 3 entries");

  const std::string bytes = detail::read_binary_file(payload);
  const std::size_t expected = shape_product(shape) * sizeof(double);
  if (bytes.size() != expected) {
    throw FormatError(payload.string() + ": sidecar shape " + shape_to_string(shape) + " needs " +
                      std::to_string(expected) + " bytes, payload has " + std::to_string(bytes.size()));
  }
  ds.data = Tensor(shape, detail::decode_f64le(bytes));
  ds.validate();

  const fs::path meta_path = stem.string() + ".meta.tsv";
  if (fs::exists(meta_path)) {
    loaded.meta = load_meta(meta_path);
    if (loaded.meta.size() != ds.n_trials()) {
      throw FormatError(meta_path.string() + ": " + std::to_string(loaded.meta.size()) + " metadata rows for " +
                        std::to_string(ds.n_trials()) + " trials");
    }
  }
  return loaded;
}

void save_erp(const fs::path& path, const ErpDataset& dataset, const std::vector<TrialMeta>* meta) {
  dataset.validate();
  const fs::path stem = erp_stem(path);
  if (meta != nullptr && meta->size() != dataset.n_trials()) {
    throw ShapeError("save_erp: " + std::to_string(meta->size()) + " metadata rows for " +
                     std::to_string(dataset.n_trials()) + " trials");
  }
  json header = {
      {"dtype", kDtype},
      {"shape", dataset.data.shape()},
      {"sampling_rate_hz", dataset.sampling_rate_hz},
      {"epoch_start_ms", dataset.epoch_start_ms},
      {"epoch_end_ms", dataset.epoch_end_ms},
      {"payload", stem.filename().string() + ".erp.bin"},
  };
  detail::write_text_file(stem.string() + ".erp.json", header.dump(2) + "\n");
  detail::write_binary_file(stem.string() + ".erp.bin", detail::encode_f64le(dataset.data.values()));
  if (meta != nullptr) save_meta(stem.string() + ".meta.tsv", *meta);
}

std::vector<TrialMeta> load_meta(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  std::vector<TrialMeta> meta;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (!header_seen) {
      if (fields != kMetaColumns) throw FormatError(where + ": metadata header must be the 7 documented columns");
      header_seen = true;
      continue;
    }
    if (fields.size() != kMetaColumns.size()) {
      throw FormatError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    TrialMeta m;
    m.subject_id = fields[0];
    m.sentence_id = detail::parse_int(fields[1], where);
    m.word_position = detail::parse_int(fields[2], where);
    if (m.word_position < 1) throw FormatError(where + ": word_position is 1-based");
    m.token = fields[3];
    m.word_class = parse_word_class(fields[4]);
    m.pos_tag = fields[5];
    m.artifact = parse_bool(fields[6], where);
    meta.push_back(std::move(m));
  }
  if (!header_seen) throw FormatError(path.string() + ": missing header row");
  return meta;
}

void save_meta(const fs::path& path, const std::vector<TrialMeta>& meta) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kMetaColumns.size(); ++i) out << (i ? "\t" : "") << kMetaColumns[i];
  out << '\n';
  for (const auto& m : meta) {
    out << m.subject_id << '\t' << m.sentence_id << '\t' << m.word_position << '\t' << m.token << '\t'
        << to_string(m.word_class) << '\t' << m.pos_tag << '\t' << (m.artifact ? 1 : 0) << '\n';
  }
  detail::write_text_file(path, out.str());
}

ErpDataset select_trials(const ErpDataset& dataset, const std::vector<std::size_t>& rows) {
  ErpDataset out = dataset;
  const std::size_t per_trial = dataset.n_channels() * dataset.n_timepoints();
  std::vector<double> values;
  values.reserve(rows.size() * per_trial);
  for (std::size_t r : rows) {
    if (r >= dataset.n_trials()) throw ShapeError("select_trials: row " + std::to_string(r) + " out of range");
    auto first = dataset.data.values().begin() + static_cast<std::ptrdiff_t>(r * per_trial);
    values.insert(values.end(), first, first + static_cast<std::ptrdiff_t>(per_trial));
  }
  out.data = Tensor({rows.size(), dataset.n_channels(), dataset.n_timepoints()}, std::move(values));
  return out;
}

FilteredTrials filter_artifacts(const ErpDataset& dataset, const std::vector<TrialMeta>& meta, bool include_first_word) {
  if (meta.size() != dataset.n_trials()) {
    throw ShapeError("filter_artifacts: " + std::to_string(meta.size()) + " metadata rows for " +
                     std::to_string(dataset.n_trials()) + " trials");
  }
  FilteredTrials out;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (meta[i].artifact) continue;
    if (!include_first_word && meta[i].word_position == 1) continue;
    out.kept.push_back(i);
    out.meta.push_back(meta[i]);
  }
  out.dataset = select_trials(dataset, out.kept);
  return out;
}

}  // namespace erpkit
