// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <sstream>

#include "erpkit/dataio.hpp"
#include "erpkit/detail/io_util.hpp"
#include "erpkit/error.hpp"
#include "erpkit/log.hpp"

namespace erpkit {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  if (!text.empty() && text[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(where + ": expected number, got '" + text + "'");
  }
  return value;
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
  auto it = entries.find(token);
  return it == entries.end() ? nullptr : &it->second;
}

std::size_t TokenFeatureTable::total_width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.width;
  return w;
}

std::pair<std::size_t, std::size_t> TokenFeatureTable::locate(const std::string& name) const {
  std::size_t offset = 0;
  for (const auto& c : columns) {
    if (c.name == name) return {offset, c.width};
    offset += c.width;
  }
  throw ConfigError("token feature table has no column '" + name + "'");
}

bool TokenFeatureTable::has_column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return true;
  }
  return false;
}

EmbeddingTable load_embeddings(const fs::path& path) {
  EmbeddingTable table;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = detail::split_whitespace(lines[i]);
    if (fields.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (fields.size() < 2) throw FormatError(where + ": embedding row has no values");
    const std::size_t dim = fields.size() - 1;
    if (table.dimension == 0) {
      table.dimension = dim;
    } else if (dim != table.dimension) {
      throw FormatError(where + ": row has " + std::to_string(dim) + " values, expected " +
                        std::to_string(table.dimension));
    }
    std::vector<double> vec(dim);
    for (std::size_t d = 0; d < dim; ++d) vec[d] = parse_double(fields[d + 1], where);
    auto [it, inserted] = table.entries.insert_or_assign(fields[0], std::move(vec));
    if (!inserted) {
      table.duplicate_tokens.push_back(fields[0]);
      log::warn(where + ": duplicate embedding token '" + fields[0] + "', keeping the last occurrence");
    }
  }
  return table;
}

void save_embeddings(const fs::path& path, const EmbeddingTable& table) {
  std::ostringstream out;
  for (const auto& [token, vec] : table.entries) {
    out << token;
    for (double v : vec) out << ' ' << format_double(v);
    out << '\n';
  }
  detail::write_text_file(path, out.str());
}

namespace {

// "name.k" with k a non-negative integer -> (name, k)
bool split_indexed(const std::string& header, std::string& name, std::size_t& index) {
  const auto dot = header.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == header.size()) return false;
  std::size_t k = 0;
  const char* first = header.data() + dot + 1;
  const char* last = header.data() + header.size();
  const auto [ptr, ec] = std::from_chars(first, last, k);
  if (ec != std::errc() || ptr != last) return false;
  name = header.substr(0, dot);
  index = k;
  return true;
}

}  // namespace

TokenFeatureTable load_token_features(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  TokenFeatureTable table;
  bool header_seen = false;
  std::size_t width = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (!header_seen) {
      if (fields.size() < 3 || fields[0] != "sentence_id" || fields[1] != "word_position") {
        throw FormatError(where + ": header must start with sentence_id, word_position and name a feature");
      }
      for (std::size_t f = 2; f < fields.size(); ++f) {
        std::string name;
        std::size_t index = 0;
        if (split_indexed(fields[f], name, index)) {
          if (index == 0) {
            table.columns.push_back({name, 1});
          } else if (!table.columns.empty() && table.columns.back().name == name &&
                     table.columns.back().width == index) {
            table.columns.back().width += 1;
          } else {
            throw FormatError(where + ": vector column '" + fields[f] + "' out of sequence");
          }
        } else {
          table.columns.push_back({fields[f], 1});
        }
      }
      width = table.total_width();
      header_seen = true;
      continue;
    }
    if (fields.size() != width + 2) {
      throw FormatError(where + ": expected " + std::to_string(width + 2) + " fields, got " +
                        std::to_string(fields.size()));
    }
    TokenKey key{detail::parse_int(fields[0], where), detail::parse_int(fields[1], where)};
    std::vector<double> row(width);
    for (std::size_t f = 0; f < width; ++f) row[f] = parse_double(fields[f + 2], where);
    if (!table.rows.emplace(key, std::move(row)).second) {
      throw FormatError(where + ": duplicate key " + to_string(key));
    }
  }
  if (!header_seen) throw FormatError(path.string() + ": missing header row");
  return table;
}

void save_token_features(const fs::path& path, const TokenFeatureTable& table) {
  std::ostringstream out;
  out << "sentence_id\tword_position";
  for (const auto& c : table.columns) {
    if (c.width == 1) {
      out << '\t' << c.name;
    } else {
      for (std::size_t k = 0; k < c.width; ++k) out << '\t' << c.name << '.' << k;
    }
  }
  out << '\n';
  const std::size_t width = table.total_width();
  for (const auto& [key, row] : table.rows) {
    if (row.size() != width) {
      throw ShapeError("token feature row " + to_string(key) + " has " + std::to_string(row.size()) +
                       " values, expected " + std::to_string(width));
    }
    out << key.sentence_id << '\t' << key.word_position;
    for (double v : row) out << '\t' << format_double(v);
    out << '\n';
  }
  detail::write_text_file(path, out.str());
}

FrequencyCounts load_counts(const fs::path& path) {
  FrequencyCounts counts;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (fields.size() != 2) throw FormatError(where + ": expected token<TAB>count");
    if (counts.empty() && fields[0] == "token" && fields[1] == "count") continue;
    const double c = parse_double(fields[1], where);
    if (!(c >= 0.0) || !std::isfinite(c)) throw FormatError(where + ": count must be a non-negative number");
    counts[fields[0]] = c;
  }
  return counts;
}

void save_counts(const fs::path& path, const FrequencyCounts& counts) {
  std::ostringstream out;
  out << "token\tcount\n";
  for (const auto& [token, c] : counts) out << token << '\t' << format_double(c) << '\n';
  detail::write_text_file(path, out.str());
}

}  // namespace erpkit
