// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "erpkit/checkpoint.hpp"

#include "erpkit/detail/io_util.hpp"
#include "erpkit/error.hpp"

namespace erpkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {
constexpr const char* kFormat = "erpkit-checkpoint-v1";

fs::path strip(const fs::path& stem) {
  std::string s = stem.string();
  for (const std::string suffix : {".ckpt.json", ".ckpt.bin"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return s.substr(0, s.size() - suffix.size());
    }
  }
  return stem;
}
}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw FormatError("checkpoint (" + kind + ") has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

fs::path checkpoint_manifest_path(const fs::path& stem) { return strip(stem).string() + ".ckpt.json"; }

void save_checkpoint(const fs::path& stem_in, const Checkpoint& checkpoint) {
  const fs::path stem = strip(stem_in);
  json entries = json::array();
  std::string payload;
  std::size_t offset = 0;
  for (const auto& t : checkpoint.tensors) {
    entries.push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"offset", offset}});
    payload += detail::encode_f64le(t.tensor.values());
    offset += t.tensor.size();
  }
  json manifest = {{"format", kFormat},
                   {"kind", checkpoint.kind},
                   {"meta", checkpoint.meta},
                   {"dtype", "f64le"},
                   {"payload", stem.filename().string() + ".ckpt.bin"},
                   {"tensors", entries}};
  detail::write_text_file(stem.string() + ".ckpt.json", manifest.dump(2) + "\n");
  detail::write_binary_file(stem.string() + ".ckpt.bin", payload);
}

Checkpoint load_checkpoint(const fs::path& stem_in) {
  const fs::path stem = strip(stem_in);
  const fs::path manifest_path = stem.string() + ".ckpt.json";
  Checkpoint checkpoint;
  json manifest;
  try {
    manifest = json::parse(detail::read_text_file(manifest_path));
    if (manifest.at("format").get<std::string>() != kFormat) {
      throw FormatError(manifest_path.string() + ": unknown checkpoint format");
    }
    checkpoint.kind = manifest.at("kind").get<std::string>();
    checkpoint.meta = manifest.at("meta");
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  const std::vector<double> values = detail::decode_f64le(detail::read_binary_file(stem.string() + ".ckpt.bin"));
  std::size_t expected = 0;
  try {
    for (const auto& entry : manifest.at("tensors")) {
      Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t count = shape_product(shape);
      if (offset + count > values.size()) {
        throw FormatError(manifest_path.string() + ": tensor '" + entry.at("name").get<std::string>() +
                          "' runs past the payload (" + std::to_string(values.size() * 8) + " bytes)");
      }
      std::vector<double> part(values.begin() + static_cast<std::ptrdiff_t>(offset),
                               values.begin() + static_cast<std::ptrdiff_t>(offset + count));
      checkpoint.tensors.push_back({entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(part))});
      expected = std::max(expected, offset + count);
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (expected != values.size()) {
    throw FormatError(manifest_path.string() + ": manifest covers " + std::to_string(expected * 8) +
                      " bytes, payload has " + std::to_string(values.size() * 8));
  }
  return checkpoint;
}

}  // namespace erpkit
