// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace erpkit::detail {

std::string read_text_file(const std::filesystem::path& path);
std::string read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
void write_binary_file(const std::filesystem::path& path, const std::string& bytes);
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::vector<std::string> split(const std::string& line, char sep);
/// Splits on runs of spaces/tabs.
std::vector<std::string> split_whitespace(const std::string& line);
int parse_int(const std::string& text, const std::string& where);

std::string encode_f64le(std::span<const double> values);
std::vector<double> decode_f64le(const std::string& bytes);

}  // namespace erpkit::detail
