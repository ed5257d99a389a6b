// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "erpkit/encoding_model.hpp"
#include "erpkit/error.hpp"

namespace erpkit {

using nlohmann::json;

Tensor apply_interface(const InterfaceMap& map, std::span<const double> features) {
  const std::size_t c_lat = map.weight.dim(0), t_lat = map.weight.dim(1), d = map.weight.dim(2);
  if (features.size() != d) {
    throw ShapeError("interface map expects " + std::to_string(d) + " inputs, got " + std::to_string(features.size()));
  }
  Tensor z({c_lat, t_lat});
  for (std::size_t u = 0; u < c_lat * t_lat; ++u) {
    z[u] = map.bias[u] + dot(map.weight.values().subspan(u * d, d), features);
  }
  return z;
}

std::vector<Tensor*> EncodingModel::trainable_tensors() {
  std::vector<Tensor*> out{&interface.weight, &interface.bias};
  if (tuner_enabled) {
    out.push_back(&tuner_weight);
    out.push_back(&tuner_bias);
  }
  return out;
}

std::vector<double> interface_input(const EncodingModel& model, std::span<const double> features) {
  if (features.size() != model.feature_width()) {
    throw ShapeError("model expects " + std::to_string(model.feature_width()) + " feature columns, got " +
                     std::to_string(features.size()));
  }
  if (!model.tuner_enabled) return {features.begin(), features.end()};
  const std::size_t e = model.embedding_width;
  const Tensor block({e}, std::vector<double>(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(e)));
  const Tensor hidden = tanh_forward(dense_forward(block, model.tuner_weight, model.tuner_bias));
  std::vector<double> input(hidden.values().begin(), hidden.values().end());
  input.insert(input.end(), features.begin() + static_cast<std::ptrdiff_t>(e), features.end());
  return input;
}

Tensor predict_latent(const EncodingModel& model, std::span<const double> features) {
  return apply_interface(model.interface, interface_input(model, features));
}

Tensor predict_erp(const EncodingModel& model, std::span<const double> features,
                   const std::optional<std::string>& subject_id) {
  return decode(model.decoder, predict_latent(model, features), subject_id);
}

EncodingModel init_encoding_model(const AutoencoderParams& decoder, const EncodingModelSpec& spec,
                                  const FeatureMatrix& features, std::uint64_t seed) {
  spec.features.validate();
  EncodingModel model;
  model.decoder = decoder;
  model.decoder_hash = decoder_hash(decoder);
  model.features = spec.features;
  model.feature_names = features.names;
  model.embedding_width = features.embedding_width;
  model.tuner_enabled = spec.tuner.enabled && features.embedding_width > 0;

  std::mt19937_64 rng(seed ^ 0x7e7e7e7eULL);
  std::size_t d_in = features.n_cols();
  if (model.tuner_enabled) {
    const std::size_t h = spec.tuner.hidden_size, e = features.embedding_width;
    if (h == 0) throw ConfigError("tuner hidden size must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(e));
    std::uniform_real_distribution<double> dist(-bound, bound);
    model.tuner_weight = Tensor({h, e});
    model.tuner_bias = Tensor({h});
    for (double& v : model.tuner_weight.values()) v = dist(rng);
    for (double& v : model.tuner_bias.values()) v = dist(rng);
    d_in = h + (features.n_cols() - e);
  }
  // zero interface: the untrained model predicts the decoder's response to a zero latent
  model.interface.weight = Tensor({decoder.plan.latent_channels, decoder.plan.latent_timepoints, d_in});
  model.interface.bias = Tensor({decoder.plan.latent_channels, decoder.plan.latent_timepoints});
  return model;
}

Tensor predict_rows(const EncodingModel& model, const FeatureMatrix& features, const std::vector<TrialMeta>& meta,
                    const std::vector<std::size_t>& rows) {
  const FeatureMatrix standardized = apply_standardizer(features.select_rows(rows), model.standardizer);
  const std::size_t c = model.decoder.spec.channels, t = model.decoder.spec.timepoints;
  Tensor out({rows.size(), c, t});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::optional<std::string> subject;
    if (model.decoder.spec.intercepts) subject = meta.at(rows[i]).subject_id;
    out.set_slice(i, predict_erp(model, standardized.row(i), subject));
  }
  return out;
}

double model_mse(const EncodingModel& model, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                 const FeatureMatrix& features, const std::vector<std::size_t>& rows) {
  const Tensor preds = predict_rows(model, features, meta, rows);
  const std::size_t per = dataset.n_channels() * dataset.n_timepoints();
  double sse = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* x = dataset.data.data() + rows[i] * per;
    const double* y = preds.data() + i * per;
    for (std::size_t j = 0; j < per; ++j) sse += (y[j] - x[j]) * (y[j] - x[j]);
  }
  return sse / static_cast<double>(rows.size() * per);
}

Checkpoint to_checkpoint(const EncodingModel& model) {
  Checkpoint ck;
  ck.kind = "encoding_model";
  std::vector<std::string> sources;
  for (FeatureSource s : model.features.sources) sources.push_back(to_string(s));
  ck.meta = {{"decoder_hash", model.decoder_hash},
             {"decoder_ref", model.decoder_ref},
             {"feature_sources", sources},
             {"feature_label", model.features.label()},
             {"feature_names", model.feature_names},
             {"embedding_width", model.embedding_width},
             {"standardizer",
              {{"mean", model.standardizer.mean},
               {"sd", model.standardizer.sd},
               {"passthrough", model.standardizer.passthrough}}},
             {"tuner_enabled", model.tuner_enabled},
             {"weight_decay", model.weight_decay},
             {"latent", {model.interface.weight.dim(0), model.interface.weight.dim(1)}}};
  ck.tensors.push_back({"interface.weight", model.interface.weight});
  ck.tensors.push_back({"interface.bias", model.interface.bias});
  if (model.tuner_enabled) {
    ck.tensors.push_back({"tuner.weight", model.tuner_weight});
    ck.tensors.push_back({"tuner.bias", model.tuner_bias});
  }
  return ck;
}

EncodingModel encoding_model_from_checkpoint(const Checkpoint& ck, const AutoencoderParams& decoder) {
  if (ck.kind != "encoding_model") throw FormatError("expected an encoding_model checkpoint, got '" + ck.kind + "'");
  EncodingModel model;
  model.decoder = decoder;
  try {
    model.decoder_hash = ck.meta.at("decoder_hash").get<std::string>();
    model.decoder_ref = ck.meta.at("decoder_ref").get<std::string>();
    for (const auto& s : ck.meta.at("feature_sources")) {
      model.features.sources.push_back(parse_feature_source(s.get<std::string>()));
    }
    model.feature_names = ck.meta.at("feature_names").get<std::vector<std::string>>();
    model.embedding_width = ck.meta.at("embedding_width").get<std::size_t>();
    const json& st = ck.meta.at("standardizer");
    model.standardizer.mean = st.at("mean").get<std::vector<double>>();
    model.standardizer.sd = st.at("sd").get<std::vector<double>>();
    model.standardizer.passthrough = st.at("passthrough").get<std::vector<std::uint8_t>>();
    model.tuner_enabled = ck.meta.at("tuner_enabled").get<bool>();
    model.weight_decay = ck.meta.at("weight_decay").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoding model checkpoint metadata: ") + e.what());
  }
  if (decoder_hash(decoder) != model.decoder_hash) {
    throw FormatError("decoder does not match the hash recorded in the encoding model checkpoint");
  }
  model.interface.weight = ck.get("interface.weight");
  model.interface.bias = ck.get("interface.bias");
  if (model.tuner_enabled) {
    model.tuner_weight = ck.get("tuner.weight");
    model.tuner_bias = ck.get("tuner.bias");
  }
  return model;
}

}  // namespace erpkit
