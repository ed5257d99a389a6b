// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "erpkit/tensor.hpp"

namespace erpkit {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// On disk: <stem>.ckpt.json (manifest: kind, metadata, tensor names/shapes/offsets in
// payload order) and <stem>.ckpt.bin (tensors back to back as f64le). Tensor order is
// the order they were added, so two saves of the same model are byte-identical.
struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& stem);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);
/// SHA-256 over the shapes and raw f64le values of the given tensors, in order.
std::string tensors_sha256(std::span<const Tensor* const> tensors);

}  // namespace erpkit
