// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "erpkit/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "erpkit/error.hpp"

namespace erpkit {

const Tensor& LayerGrad::param(std::string_view name) const {
  for (const auto& p : param_grads) {
    if (p.name == name) return p.grad;
  }
  throw std::out_of_range("no parameter gradient named " + std::string(name));
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                     shape_to_string(t.shape()));
  }
}

// Range of output positions o with 0 <= o*stride + k - pad < length, as [lo, hi).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_outputs(std::size_t k, std::size_t pad, std::size_t stride, std::size_t length, std::size_t n_out) {
  // need o*stride >= pad - k  and  o*stride + k - pad <= length - 1
  const long long kk = static_cast<long long>(k);
  const long long p = static_cast<long long>(pad);
  const long long s = static_cast<long long>(stride);
  const long long need_lo = p - kk;
  long long lo = need_lo <= 0 ? 0 : (need_lo + s - 1) / s;
  const long long top = static_cast<long long>(length) - 1 + p - kk;
  long long hi = top < 0 ? 0 : top / s + 1;
  hi = std::min<long long>(hi, static_cast<long long>(n_out));
  lo = std::min(lo, hi);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry g) {
  if (g.stride == 0) throw ShapeError("conv1d: stride must be >= 1");
  if (kernel > length + 2 * g.padding) {
    throw ShapeError("conv1d: kernel " + std::to_string(kernel) + " longer than padded input " +
                     std::to_string(length + 2 * g.padding));
  }
  return (length + 2 * g.padding - kernel) / g.stride + 1;
}

std::size_t convtranspose1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry g) {
  if (g.stride == 0) throw ShapeError("convtranspose1d: stride must be >= 1");
  const std::size_t full = (length - 1) * g.stride + kernel;
  if (length == 0 || full <= 2 * g.padding) {
    throw ShapeError("convtranspose1d: padding " + std::to_string(g.padding) + " consumes the whole output");
  }
  return full - 2 * g.padding;
}

std::size_t pool1d_output_length(std::size_t length, std::size_t window, std::size_t stride) {
  if (stride == 0 || window == 0) throw ShapeError("maxpool1d: window and stride must be >= 1");
  if (window > length) {
    throw ShapeError("maxpool1d: window " + std::to_string(window) + " exceeds input length " +
                     std::to_string(length));
  }
  return (length - window) / stride + 1;
}

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, ConvGeometry g) {
  require_rank(input, 2, "conv1d input");
  require_rank(kernels, 3, "conv1d kernels");
  const std::size_t c_in = input.dim(0), length = input.dim(1);
  const std::size_t c_out = kernels.dim(0), k_size = kernels.dim(2);
  if (kernels.dim(1) != c_in) {
    throw ShapeError("conv1d: input " + shape_to_string(input.shape()) + " has " + std::to_string(c_in) +
                     " channels but kernels " + shape_to_string(kernels.shape()) + " expect " +
                     std::to_string(kernels.dim(1)));
  }
  if (bias.size() != c_out) {
    throw ShapeError("conv1d: bias " + shape_to_string(bias.shape()) + " does not match kernels " +
                     shape_to_string(kernels.shape()));
  }
  const std::size_t n_out = conv1d_output_length(length, k_size, g);
  Tensor out({c_out, n_out});
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    double* row = out.data() + oc * n_out;
    std::fill(row, row + n_out, bias[oc]);
    for (std::size_t ic = 0; ic < c_in; ++ic) {
      const double* in_row = input.data() + ic * length;
      for (std::size_t k = 0; k < k_size; ++k) {
        const double w = kernels.at(oc, ic, k);
        const Span span = valid_outputs(k, g.padding, g.stride, length, n_out);
        for (std::size_t o = span.lo; o < span.hi; ++o) {
          row[o] += w * in_row[o * g.stride + k - g.padding];
        }
      }
    }
  }
  return out;
}

LayerGrad conv1d_backward(const Tensor& input, const Tensor& kernels, ConvGeometry g, const Tensor& upstream,
                          GradMode mode) {
  const std::size_t c_in = input.dim(0), length = input.dim(1);
  const std::size_t c_out = kernels.dim(0), k_size = kernels.dim(2);
  const std::size_t n_out = conv1d_output_length(length, k_size, g);
  if (upstream.shape() != Shape{c_out, n_out}) {
    throw ShapeError("conv1d_backward: upstream " + shape_to_string(upstream.shape()) + " but forward output is " +
                     shape_to_string({c_out, n_out}));
  }
  const bool params = mode == GradMode::kInputAndParams;
  LayerGrad grad;
  grad.input_grad = Tensor(input.shape());
  Tensor kernel_grad(params ? kernels.shape() : Shape{});
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    const double* up = upstream.data() + oc * n_out;
    for (std::size_t ic = 0; ic < c_in; ++ic) {
      const double* in_row = input.data() + ic * length;
      double* gin = grad.input_grad.data() + ic * length;
      for (std::size_t k = 0; k < k_size; ++k) {
        const double w = kernels.at(oc, ic, k);
        const Span span = valid_outputs(k, g.padding, g.stride, length, n_out);
        double acc = 0.0;
        for (std::size_t o = span.lo; o < span.hi; ++o) {
          const std::size_t pos = o * g.stride + k - g.padding;
          gin[pos] += w * up[o];
          acc += in_row[pos] * up[o];
        }
        if (params) kernel_grad.at(oc, ic, k) = acc;
      }
    }
  }
  if (params) {
    Tensor bias_grad({c_out});
    for (std::size_t oc = 0; oc < c_out; ++oc) {
      double acc = 0.0;
      for (std::size_t o = 0; o < n_out; ++o) acc += upstream.at(oc, o);
      bias_grad[oc] = acc;
    }
    grad.param_grads.push_back({"kernels", std::move(kernel_grad)});
    grad.param_grads.push_back({"bias", std::move(bias_grad)});
  }
  return grad;
}

Tensor convtranspose1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, ConvGeometry g) {
  require_rank(input, 2, "convtranspose1d input");
  require_rank(kernels, 3, "convtranspose1d kernels");
  const std::size_t c_in = input.dim(0), length = input.dim(1);
  const std::size_t c_out = kernels.dim(1), k_size = kernels.dim(2);
  if (kernels.dim(0) != c_in) {
    throw ShapeError("convtranspose1d: input " + shape_to_string(input.shape()) + " has " +
                     std::to_string(c_in) + " channels but kernels " + shape_to_string(kernels.shape()) +
                     " expect " + std::to_string(kernels.dim(0)));
  }
  if (bias.size() != c_out) {
    throw ShapeError("convtranspose1d: bias " + shape_to_string(bias.shape()) + " does not match kernels " +
                     shape_to_string(kernels.shape()));
  }
  const std::size_t n_out = convtranspose1d_output_length(length, k_size, g);
  Tensor out({c_out, n_out});
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    double* row = out.data() + oc * n_out;
    std::fill(row, row + n_out, bias[oc]);
    for (std::size_t ic = 0; ic < c_in; ++ic) {
      const double* in_row = input.data() + ic * length;
      for (std::size_t k = 0; k < k_size; ++k) {
        const double w = kernels.at(ic, oc, k);
        // input position t writes to t*stride + k - padding; same index algebra as conv with roles swapped
        const Span span = valid_outputs(k, g.padding, g.stride, n_out, length);
        for (std::size_t t = span.lo; t < span.hi; ++t) {
          row[t * g.stride + k - g.padding] += w * in_row[t];
        }
      }
    }
  }
  return out;
}

LayerGrad convtranspose1d_backward(const Tensor& input, const Tensor& kernels, ConvGeometry g,
                                   const Tensor& upstream, GradMode mode) {
  const std::size_t c_in = input.dim(0), length = input.dim(1);
  const std::size_t c_out = kernels.dim(1), k_size = kernels.dim(2);
  const std::size_t n_out = convtranspose1d_output_length(length, k_size, g);
  if (upstream.shape() != Shape{c_out, n_out}) {
    throw ShapeError("convtranspose1d_backward: upstream " + shape_to_string(upstream.shape()) +
                     " but forward output is " + shape_to_string({c_out, n_out}));
  }
  const bool params = mode == GradMode::kInputAndParams;
  LayerGrad grad;
  grad.input_grad = Tensor(input.shape());
  Tensor kernel_grad(params ? kernels.shape() : Shape{});
  for (std::size_t ic = 0; ic < c_in; ++ic) {
    const double* in_row = input.data() + ic * length;
    double* gin = grad.input_grad.data() + ic * length;
    for (std::size_t oc = 0; oc < c_out; ++oc) {
      const double* up = upstream.data() + oc * n_out;
      for (std::size_t k = 0; k < k_size; ++k) {
        const double w = kernels.at(ic, oc, k);
        const Span span = valid_outputs(k, g.padding, g.stride, n_out, length);
        double acc = 0.0;
        for (std::size_t t = span.lo; t < span.hi; ++t) {
          const double u = up[t * g.stride + k - g.padding];
          gin[t] += w * u;
          acc += in_row[t] * u;
        }
        if (params) kernel_grad.at(ic, oc, k) = acc;
      }
    }
  }
  if (params) {
    Tensor bias_grad({c_out});
    for (std::size_t oc = 0; oc < c_out; ++oc) {
      double acc = 0.0;
      for (std::size_t o = 0; o < n_out; ++o) acc += upstream.at(oc, o);
      bias_grad[oc] = acc;
    }
    grad.param_grads.push_back({"kernels", std::move(kernel_grad)});
    grad.param_grads.push_back({"bias", std::move(bias_grad)});
  }
  return grad;
}

PoolResult maxpool1d_forward(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank(input, 2, "maxpool1d input");
  const std::size_t channels = input.dim(0), length = input.dim(1);
  const std::size_t n_out = pool1d_output_length(length, window, stride);
  PoolResult result{Tensor({channels, n_out}), std::vector<std::size_t>(channels * n_out)};
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = input.data() + c * length;
    for (std::size_t o = 0; o < n_out; ++o) {
      std::size_t best = o * stride;
      for (std::size_t j = best + 1; j < o * stride + window; ++j) {
        if (row[j] > row[best]) best = j;
      }
      result.output.at(c, o) = row[best];
      result.argmax[c * n_out + o] = best;
    }
  }
  return result;
}

Tensor maxpool1d_backward(const Shape& input_shape, const PoolResult& forward, const Tensor& upstream) {
  require_same_shape(forward.output, upstream, "maxpool1d_backward");
  Tensor grad(input_shape);
  const std::size_t channels = upstream.dim(0), n_out = upstream.dim(1);
  const std::size_t length = input_shape.at(1);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t o = 0; o < n_out; ++o) {
      grad[c * length + forward.argmax[c * n_out + o]] += upstream.at(c, o);
    }
  }
  return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "dense weight");
  const std::size_t h = weight.dim(0), d = weight.dim(1);
  if (input.size() != d || bias.size() != h) {
    throw ShapeError("dense: input " + shape_to_string(input.shape()) + ", weight " +
                     shape_to_string(weight.shape()) + ", bias " + shape_to_string(bias.shape()) +
                     " are inconsistent");
  }
  Tensor out({h});
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = bias[i] + dot(weight.values().subspan(i * d, d), input.values());
  }
  return out;
}

LayerGrad dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream, GradMode mode) {
  const std::size_t h = weight.dim(0), d = weight.dim(1);
  if (upstream.size() != h || input.size() != d) {
    throw ShapeError("dense_backward: upstream " + shape_to_string(upstream.shape()) + " vs weight " +
                     shape_to_string(weight.shape()));
  }
  LayerGrad grad;
  grad.input_grad = Tensor(input.shape());
  for (std::size_t i = 0; i < h; ++i) {
    const double u = upstream[i];
    for (std::size_t j = 0; j < d; ++j) grad.input_grad[j] += weight.at(i, j) * u;
  }
  if (mode == GradMode::kInputAndParams) {
    Tensor wg(weight.shape());
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < d; ++j) wg.at(i, j) = upstream[i] * input[j];
    }
    grad.param_grads.push_back({"weight", std::move(wg)});
    grad.param_grads.push_back({"bias", Tensor({h}, std::vector<double>(upstream.values().begin(),
                                                                      upstream.values().end()))});
  }
  return grad;
}

Tensor tanh_forward(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = std::tanh(input[i]);
  return out;
}

Tensor tanh_backward(const Tensor& output, const Tensor& upstream) {
  require_same_shape(output, upstream, "tanh_backward");
  Tensor grad(output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) grad[i] = upstream[i] * (1.0 - output[i] * output[i]);
  return grad;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  const double n = static_cast<double>(pred.size());
  LossResult result{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    result.value += diff * diff;
    result.grad[i] = 2.0 * diff / n;
  }
  result.value /= n;
  return result;
}

}  // namespace erpkit
