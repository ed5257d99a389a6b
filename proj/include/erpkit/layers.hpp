// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "erpkit/tensor.hpp"

namespace erpkit {

/// Gradient of a layer with respect to its input and each of its parameters.
struct LayerGrad {
  struct Named {
    std::string name;
    Tensor grad;
  };

  Tensor input_grad;
  std::vector<Named> param_grads;

  /// Throws std::out_of_range when no parameter of that name exists.
  const Tensor& param(std::string_view name) const;
};

enum class GradMode {
  kInputAndParams,
  kInputOnly,  // frozen layers: parameter gradients left empty
};

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry geometry);
std::size_t convtranspose1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry geometry);
std::size_t pool1d_output_length(std::size_t length, std::size_t window, std::size_t stride);

// 1D convolution, cross-correlation convention (no kernel flip).
// input C_in x T, kernels C_out x C_in x K, bias C_out -> C_out x T_out.
Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, ConvGeometry geometry);

// Parameter gradients are named "kernels" and "bias".
LayerGrad conv1d_backward(const Tensor& input, const Tensor& kernels, ConvGeometry geometry,
                          const Tensor& upstream, GradMode mode = GradMode::kInputAndParams);

// Transposed convolution: the adjoint of conv1d_forward with the same geometry.
// input C_in x T, kernels C_in x C_out x K, bias C_out -> C_out x ((T-1)*stride + K - 2*padding).
Tensor convtranspose1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                               ConvGeometry geometry);

LayerGrad convtranspose1d_backward(const Tensor& input, const Tensor& kernels, ConvGeometry geometry,
                                   const Tensor& upstream, GradMode mode = GradMode::kInputAndParams);

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat position within the input row, one per output element
};

/// Max pooling along time. Ties go to the lowest index.
PoolResult maxpool1d_forward(const Tensor& input, std::size_t window, std::size_t stride);

/// Routes each upstream element to the position that won its window.
Tensor maxpool1d_backward(const Shape& input_shape, const PoolResult& forward, const Tensor& upstream);

// Affine map: input D, weight H x D, bias H -> H. Parameter grads "weight", "bias".
Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);
LayerGrad dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream,
                         GradMode mode = GradMode::kInputAndParams);

Tensor tanh_forward(const Tensor& input);
/// Takes the forward *output*, since tanh' = 1 - tanh^2.
Tensor tanh_backward(const Tensor& output, const Tensor& upstream);

struct LossResult {
  double value = 0.0;
  Tensor grad;
};

/// Mean squared error over all elements; grad = 2 (pred - target) / N.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace erpkit
