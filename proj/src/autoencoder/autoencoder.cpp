// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "erpkit/autoencoder.hpp"
#include "erpkit/error.hpp"

namespace erpkit {

using nlohmann::json;

std::vector<Tensor*> AutoencoderParams::decoder_tensors() {
  std::vector<Tensor*> out;
  for (auto& p : decoder) {
    if (p.kernels.empty()) continue;
    out.push_back(&p.kernels);
    out.push_back(&p.bias);
  }
  if (spec.intercepts) out.push_back(&intercepts);
  return out;
}

std::vector<const Tensor*> AutoencoderParams::decoder_tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& p : decoder) {
    if (p.kernels.empty()) continue;
    out.push_back(&p.kernels);
    out.push_back(&p.bias);
  }
  if (spec.intercepts) out.push_back(&intercepts);
  return out;
}

std::vector<Tensor*> AutoencoderParams::trainable_tensors() {
  std::vector<Tensor*> out;
  for (auto& p : encoder) {
    if (p.kernels.empty()) continue;
    out.push_back(&p.kernels);
    out.push_back(&p.bias);
  }
  auto dec = decoder_tensors();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

std::size_t AutoencoderParams::subject_index(const std::string& subject_id) const {
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i] == subject_id) return i;
  }
  throw ConfigError("unknown subject '" + subject_id + "' for a decoder with intercepts");
}

namespace {

ConvParams init_layer(const LayerDesc& d, std::mt19937_64& rng) {
  if (!d.has_params()) return {};
  Shape shape = d.kind == LayerKind::kConv ? Shape{d.out_channels, d.in_channels, d.kernel}
                                           : Shape{d.in_channels, d.out_channels, d.kernel};
  // taps feeding one output position
  const std::size_t taps = d.kind == LayerKind::kConv ? d.kernel : (d.kernel + d.stride - 1) / d.stride;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d.in_channels * taps));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ConvParams p{Tensor(shape), Tensor({d.out_channels})};
  for (double& v : p.kernels.values()) v = dist(rng);
  for (double& v : p.bias.values()) v = dist(rng);
  return p;
}

}  // namespace

AutoencoderParams init_autoencoder(const AutoencoderSpec& spec, const std::vector<std::string>& subjects,
                                   std::uint64_t seed) {
  AutoencoderParams params;
  params.spec = spec;
  params.plan = build_layer_plan(spec);
  std::mt19937_64 rng(seed);
  for (const auto& d : params.plan.encoder) params.encoder.push_back(init_layer(d, rng));
  for (const auto& d : params.plan.decoder) params.decoder.push_back(init_layer(d, rng));
  if (spec.intercepts) {
    params.subjects = subjects;
    params.intercepts = Tensor({subjects.size(), spec.channels});
  }
  return params;
}

Tensor run_stack(const std::vector<LayerDesc>& layers, const std::vector<ConvParams>& params, const Tensor& x,
                 StackTrace* trace) {
  Tensor current = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerDesc& d = layers[i];
    if (trace != nullptr) trace->inputs.push_back(current);
    Tensor out;
    switch (d.kind) {
      case LayerKind::kConv:
        out = conv1d_forward(current, params[i].kernels, params[i].bias, {d.stride, d.padding});
        break;
      case LayerKind::kConvTranspose:
        out = convtranspose1d_forward(current, params[i].kernels, params[i].bias, {d.stride, d.padding});
        break;
      case LayerKind::kPool: {
        PoolResult pooled = maxpool1d_forward(current, d.kernel, d.stride);
        out = pooled.output;
        if (trace != nullptr) trace->pools.push_back(std::move(pooled));
        break;
      }
    }
    if (d.kind != LayerKind::kPool && trace != nullptr) trace->pools.emplace_back();
    if (d.activation == Activation::kTanh) out = tanh_forward(out);
    if (trace != nullptr) trace->outputs.push_back(out);
    current = std::move(out);
  }
  return current;
}

Tensor backprop_stack(const std::vector<LayerDesc>& layers, const std::vector<ConvParams>& params,
                      const StackTrace& trace, const Tensor& upstream, std::vector<ConvParams>* param_grads) {
  Tensor grad = upstream;
  const GradMode mode = param_grads != nullptr ? GradMode::kInputAndParams : GradMode::kInputOnly;
  for (std::size_t n = layers.size(); n-- > 0;) {
    const LayerDesc& d = layers[n];
    if (d.activation == Activation::kTanh) grad = tanh_backward(trace.outputs[n], grad);
    switch (d.kind) {
      case LayerKind::kPool:
        grad = maxpool1d_backward(trace.inputs[n].shape(), trace.pools[n], grad);
        break;
      case LayerKind::kConv:
      case LayerKind::kConvTranspose: {
        LayerGrad lg = d.kind == LayerKind::kConv
                           ? conv1d_backward(trace.inputs[n], params[n].kernels, {d.stride, d.padding}, grad, mode)
                           : convtranspose1d_backward(trace.inputs[n], params[n].kernels, {d.stride, d.padding},
                                                      grad, mode);
        if (param_grads != nullptr) {
          ConvParams& acc = (*param_grads)[n];
          if (acc.kernels.empty()) {
            acc.kernels = lg.param("kernels");
            acc.bias = lg.param("bias");
          } else {
            acc.kernels += lg.param("kernels");
            acc.bias += lg.param("bias");
          }
        }
        grad = std::move(lg.input_grad);
        break;
      }
    }
  }
  return grad;
}

Tensor encode(const AutoencoderParams& params, const Tensor& erp) {
  if (!params.has_encoder) throw ConfigError("checkpoint holds a decoder only; cannot encode");
  if (erp.shape() != Shape{params.spec.channels, params.spec.timepoints}) {
    throw ShapeError("encode: expected " + shape_to_string({params.spec.channels, params.spec.timepoints}) +
                     ", got " + shape_to_string(erp.shape()));
  }
  return run_stack(params.plan.encoder, params.encoder, erp);
}

Tensor decode(const AutoencoderParams& params, const Tensor& latent, const std::optional<std::string>& subject_id) {
  if (latent.shape() != Shape{params.plan.latent_channels, params.plan.latent_timepoints}) {
    throw ShapeError("decode: expected latent " +
                     shape_to_string({params.plan.latent_channels, params.plan.latent_timepoints}) + ", got " +
                     shape_to_string(latent.shape()));
  }
  Tensor out = run_stack(params.plan.decoder, params.decoder, latent);
  if (params.spec.intercepts) {
    if (!subject_id) throw ConfigError("decode: decoder has intercepts, a subject id is required");
    const std::size_t s = params.subject_index(*subject_id);
    const std::size_t t_len = out.dim(1);
    for (std::size_t c = 0; c < out.dim(0); ++c) {
      const double b = params.intercepts.at(s, c);
      for (std::size_t t = 0; t < t_len; ++t) out.at(c, t) += b;
    }
  }
  return out;
}

Tensor reconstruct(const AutoencoderParams& params, const Tensor& erp, const std::optional<std::string>& subject_id) {
  return decode(params, encode(params, erp), subject_id);
}

namespace {

json layer_to_json(const LayerDesc& d) {
  const char* kind = d.kind == LayerKind::kConv ? "conv" : d.kind == LayerKind::kPool ? "pool" : "convtranspose";
  return {{"kind", kind},
          {"in_channels", d.in_channels},
          {"out_channels", d.out_channels},
          {"kernel", d.kernel},
          {"stride", d.stride},
          {"padding", d.padding},
          {"activation", d.activation == Activation::kTanh ? "tanh" : "linear"},
          {"in_length", d.in_length},
          {"out_length", d.out_length}};
}

}  // namespace

Checkpoint to_checkpoint(const AutoencoderParams& params) {
  Checkpoint ck;
  ck.kind = "autoencoder";
  json enc = json::array(), dec = json::array();
  for (const auto& d : params.plan.encoder) enc.push_back(layer_to_json(d));
  for (const auto& d : params.plan.decoder) dec.push_back(layer_to_json(d));
  ck.meta = {{"spec",
              {{"architecture", to_string(params.spec.architecture)},
               {"intercepts", params.spec.intercepts},
               {"channels", params.spec.channels},
               {"timepoints", params.spec.timepoints}}},
             {"layer_plan", {{"encoder", enc}, {"decoder", dec}}},
             {"latent", {params.plan.latent_channels, params.plan.latent_timepoints}},
             {"has_encoder", params.has_encoder},
             {"subjects", params.subjects}};
  if (params.has_encoder) {
    for (std::size_t i = 0; i < params.encoder.size(); ++i) {
      if (params.encoder[i].kernels.empty()) continue;
      ck.tensors.push_back({"encoder." + std::to_string(i) + ".kernels", params.encoder[i].kernels});
      ck.tensors.push_back({"encoder." + std::to_string(i) + ".bias", params.encoder[i].bias});
    }
  }
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    if (params.decoder[i].kernels.empty()) continue;
    ck.tensors.push_back({"decoder." + std::to_string(i) + ".kernels", params.decoder[i].kernels});
    ck.tensors.push_back({"decoder." + std::to_string(i) + ".bias", params.decoder[i].bias});
  }
  if (params.spec.intercepts) ck.tensors.push_back({"intercepts", params.intercepts});
  return ck;
}

AutoencoderParams autoencoder_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "autoencoder") throw FormatError("expected an autoencoder checkpoint, got '" + ck.kind + "'");
  AutoencoderParams params;
  try {
    const json& s = ck.meta.at("spec");
    params.spec.architecture = parse_architecture(s.at("architecture").get<std::string>());
    params.spec.intercepts = s.at("intercepts").get<bool>();
    params.spec.channels = s.at("channels").get<std::size_t>();
    params.spec.timepoints = s.at("timepoints").get<std::size_t>();
    params.has_encoder = ck.meta.at("has_encoder").get<bool>();
    params.subjects = ck.meta.at("subjects").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("autoencoder checkpoint metadata: ") + e.what());
  }
  params.plan = build_layer_plan(params.spec);
  auto load_layer = [&](const std::string& prefix, std::size_t i, const LayerDesc& d) -> ConvParams {
    if (!d.has_params()) return {};
    ConvParams p{ck.get(prefix + std::to_string(i) + ".kernels"), ck.get(prefix + std::to_string(i) + ".bias")};
    const Shape want = d.kind == LayerKind::kConv ? Shape{d.out_channels, d.in_channels, d.kernel}
                                                  : Shape{d.in_channels, d.out_channels, d.kernel};
    if (p.kernels.shape() != want || p.bias.shape() != Shape{d.out_channels}) {
      throw FormatError("checkpoint tensor " + prefix + std::to_string(i) + " has shape " +
                        shape_to_string(p.kernels.shape()) + ", layer plan needs " + shape_to_string(want));
    }
    return p;
  };
  if (params.has_encoder) {
    for (std::size_t i = 0; i < params.plan.encoder.size(); ++i) {
      params.encoder.push_back(load_layer("encoder.", i, params.plan.encoder[i]));
    }
  } else {
    params.encoder.resize(params.plan.encoder.size());
  }
  for (std::size_t i = 0; i < params.plan.decoder.size(); ++i) {
    params.decoder.push_back(load_layer("decoder.", i, params.plan.decoder[i]));
  }
  if (params.spec.intercepts) {
    params.intercepts = ck.get("intercepts");
    if (params.intercepts.shape() != Shape{params.subjects.size(), params.spec.channels}) {
      throw FormatError("intercept table shape " + shape_to_string(params.intercepts.shape()) +
                        " does not match subjects x channels");
    }
  }
  return params;
}

std::string decoder_hash(const AutoencoderParams& params) {
  const auto tensors = params.decoder_tensors();
  return tensors_sha256(tensors);
}

}  // namespace erpkit
