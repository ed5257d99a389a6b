// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "erpkit/autoencoder.hpp"
#include "erpkit/error.hpp"

namespace erpkit {

std::string to_string(Architecture arch) { return arch == Architecture::kAlpha ? "alpha" : "beta"; }

Architecture parse_architecture(const std::string& text) {
  if (text == "alpha") return Architecture::kAlpha;
  if (text == "beta") return Architecture::kBeta;
  throw ConfigError("architecture must be 'alpha' or 'beta', got '" + text + "'");
}

std::string AutoencoderSpec::label() const { return to_string(architecture) + (intercepts ? "+intercepts" : ""); }

namespace {

class PlanBuilder {
 public:
  PlanBuilder(std::size_t channels, std::size_t length) : channels_(channels), length_(length) {}

  PlanBuilder& conv(std::size_t out, std::size_t k, std::size_t pad, Activation act) {
    LayerDesc d{LayerKind::kConv, channels_, out, k, 1, pad, act, length_, 0};
    d.out_length = conv1d_output_length(length_, k, {1, pad});
    return push(d);
  }
  PlanBuilder& pool(std::size_t window) {
    LayerDesc d{LayerKind::kPool, channels_, channels_, window, window, 0, Activation::kNone, length_, 0};
    d.out_length = pool1d_output_length(length_, window, window);
    return push(d);
  }
  PlanBuilder& convt(std::size_t out, std::size_t k, std::size_t stride, std::size_t pad, Activation act) {
    LayerDesc d{LayerKind::kConvTranspose, channels_, out, k, stride, pad, act, length_, 0};
    d.out_length = convtranspose1d_output_length(length_, k, {stride, pad});
    return push(d);
  }

  std::vector<LayerDesc> layers;
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }

 private:
  PlanBuilder& push(const LayerDesc& d) {
    layers.push_back(d);
    channels_ = d.out_channels;
    length_ = d.out_length;
    return *this;
  }
  std::size_t channels_;
  std::size_t length_;
};

}  // namespace

LayerPlan build_layer_plan(const AutoencoderSpec& spec) {
  const std::size_t c = spec.channels, t = spec.timepoints;
  if (c == 0) throw ConfigError("autoencoder needs at least one input channel");
  LayerPlan plan;
  const auto tanh = Activation::kTanh, linear = Activation::kNone;
  if (spec.architecture == Architecture::kBeta) {
    if (t % 10 != 0 || t < 10) {
      throw ConfigError("beta plan needs timepoints = 10 * n (n >= 1): " + std::to_string(t) + " = 10 * " +
                        std::to_string(t / 10) + " + " + std::to_string(t % 10));
    }
    PlanBuilder enc(c, t);
    enc.conv(16, 9, 4, tanh).pool(5).conv(10, 5, 2, tanh).pool(2);
    PlanBuilder dec(enc.channels(), enc.length());
    dec.convt(16, 4, 2, 1, tanh).convt(c, 9, 5, 2, linear);
    plan.encoder = std::move(enc.layers);
    plan.decoder = std::move(dec.layers);
  } else {
    if (t % 20 != 0 || t < 40) {
      throw ConfigError("alpha plan needs timepoints = 20 * n (n >= 2): " + std::to_string(t) + " = 20 * " +
                        std::to_string(t / 20) + " + " + std::to_string(t % 20));
    }
    PlanBuilder enc(c, t);
    enc.conv(12, 9, 4, tanh).pool(4).conv(5, 5, 2, tanh).pool(5).conv(5, 2, 0, tanh);
    PlanBuilder dec(enc.channels(), enc.length());
    dec.convt(5, 2, 1, 0, tanh).convt(12, 9, 5, 2, tanh).convt(c, 8, 4, 2, linear);
    plan.encoder = std::move(enc.layers);
    plan.decoder = std::move(dec.layers);
  }
  plan.latent_channels = plan.encoder.back().out_channels;
  plan.latent_timepoints = plan.encoder.back().out_length;
  const LayerDesc& last = plan.decoder.back();
  if (last.out_channels != c || last.out_length != t) {
    throw ConfigError("decoder mirror yields " + std::to_string(last.out_channels) + "x" +
                      std::to_string(last.out_length) + ", input is " + std::to_string(c) + "x" + std::to_string(t));
  }
  return plan;
}

}  // namespace erpkit
