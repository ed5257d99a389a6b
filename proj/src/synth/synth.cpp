// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "erpkit/error.hpp"
#include "erpkit/synth.hpp"

namespace erpkit {

using nlohmann::json;

void SynthConfig::validate() const {
  if (n_subjects < 1 || n_sentences < 1 || words_per_sentence < 1) {
    throw ConfigError("synth: subject, sentence and word counts must be >= 1");
  }
  if (n_channels < 1 || n_timepoints < 1) throw ConfigError("synth: channels and timepoints must be >= 1");
  if (!(sampling_rate_hz > 0.0)) throw ConfigError("synth: sampling rate must be positive");
  if (!(noise_sd >= 0.0)) throw ConfigError("synth: noise_sd must be >= 0");
  if (snr && !(*snr > 0.0)) throw ConfigError("synth: snr must be positive");
  if (subject_offset_sd < 0.0 || weight_scale < 0.0 || bias_scale < 0.0) {
    throw ConfigError("synth: scales must be >= 0");
  }
  if (vocab_size < 2) throw ConfigError("synth: vocab_size must be >= 2");
  if (!(function_word_share > 0.0 && function_word_share < 1.0)) {
    throw ConfigError("synth: function_word_share must lie in (0, 1)");
  }
  if (embedding_dim < 1 || contextual_dim < 1) throw ConfigError("synth: embedding dimensions must be >= 1");
  if (!(artifact_rate >= 0.0 && artifact_rate < 1.0)) throw ConfigError("synth: artifact_rate must lie in [0, 1)");
  drivers.validate();
  if (drivers.has(FeatureSource::kConstant)) throw ConfigError("synth: the constant source cannot drive the signal");
  if (active_window_ms && active_window_ms->first > active_window_ms->second) {
    throw ConfigError("synth: active window start exceeds its end");
  }
  build_layer_plan(AutoencoderSpec{architecture, intercepts, n_channels, n_timepoints});
}

SynthConfig synth_config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "n_subjects",    "n_sentences",     "words_per_sentence", "n_channels",      "n_timepoints",
      "sampling_rate_hz", "epoch_start_ms", "architecture",     "intercepts",      "subject_offset_sd",
      "noise_sd",      "snr",             "drivers",            "weight_scale",    "bias_scale",
      "active_window_ms", "vocab_size",   "function_word_share", "embedding_dim",  "contextual_dim",
      "artifact_rate", "seed"};
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("synth config: unknown key '" + key + "'");
  }
  SynthConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("n_subjects", c.n_subjects);
    get("n_sentences", c.n_sentences);
    get("words_per_sentence", c.words_per_sentence);
    get("n_channels", c.n_channels);
    get("n_timepoints", c.n_timepoints);
    get("sampling_rate_hz", c.sampling_rate_hz);
    get("epoch_start_ms", c.epoch_start_ms);
    get("intercepts", c.intercepts);
    get("subject_offset_sd", c.subject_offset_sd);
    get("noise_sd", c.noise_sd);
    get("weight_scale", c.weight_scale);
    get("bias_scale", c.bias_scale);
    get("vocab_size", c.vocab_size);
    get("function_word_share", c.function_word_share);
    get("embedding_dim", c.embedding_dim);
    get("contextual_dim", c.contextual_dim);
    get("artifact_rate", c.artifact_rate);
    get("seed", c.seed);
    if (j.contains("architecture")) c.architecture = parse_architecture(j.at("architecture").get<std::string>());
    if (j.contains("drivers")) c.drivers = parse_feature_spec(j.at("drivers").get<std::string>());
    if (j.contains("snr") && !j.at("snr").is_null()) c.snr = j.at("snr").get<double>();
    if (j.contains("active_window_ms") && !j.at("active_window_ms").is_null()) {
      const auto w = j.at("active_window_ms").get<std::vector<double>>();
      if (w.size() != 2) throw ConfigError("synth config: active_window_ms needs two values");
      c.active_window_ms = std::make_pair(w[0], w[1]);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const SynthConfig& c) {
  json j = {{"n_subjects", c.n_subjects},
            {"n_sentences", c.n_sentences},
            {"words_per_sentence", c.words_per_sentence},
            {"n_channels", c.n_channels},
            {"n_timepoints", c.n_timepoints},
            {"sampling_rate_hz", c.sampling_rate_hz},
            {"epoch_start_ms", c.epoch_start_ms},
            {"architecture", to_string(c.architecture)},
            {"intercepts", c.intercepts},
            {"subject_offset_sd", c.subject_offset_sd},
            {"noise_sd", c.noise_sd},
            {"snr", nullptr},
            {"drivers", c.drivers.label()},
            {"weight_scale", c.weight_scale},
            {"bias_scale", c.bias_scale},
            {"active_window_ms", nullptr},
            {"vocab_size", c.vocab_size},
            {"function_word_share", c.function_word_share},
            {"embedding_dim", c.embedding_dim},
            {"contextual_dim", c.contextual_dim},
            {"artifact_rate", c.artifact_rate},
            {"seed", c.seed}};
  if (c.snr) j["snr"] = *c.snr;
  if (c.active_window_ms) j["active_window_ms"] = {c.active_window_ms->first, c.active_window_ms->second};
  return j;
}

std::vector<double> GroundTruth::design_row(std::size_t trial) const {
  std::vector<double> row;
  for (const auto& b : blocks) {
    const auto first = b.values.begin() + static_cast<std::ptrdiff_t>(trial * b.width());
    row.insert(row.end(), first, first + static_cast<std::ptrdiff_t>(b.width()));
  }
  return row;
}

namespace {

struct Word {
  std::string token;
  WordClass word_class;
  std::string pos_tag;
  double count;
};

std::string numbered(const char* prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::vector<Word> make_vocabulary(const SynthConfig& c) {
  const auto n_function = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(c.function_word_share * static_cast<double>(c.vocab_size))), 1,
      c.vocab_size - 1);
  static const char* function_tags[] = {"DET", "ADP", "PRON", "CCONJ"};
  static const char* content_tags[] = {"NOUN", "VERB", "ADJ", "ADV"};
  std::vector<Word> words;
  for (std::size_t i = 0; i < n_function; ++i) {
    // function words: few types, high and steeply Zipfian counts
    words.push_back({numbered("fn", i, 3), WordClass::kFunction, function_tags[i % 4],
                     std::floor(20000.0 / static_cast<double>(i + 1))});
  }
  for (std::size_t i = 0; i < c.vocab_size - n_function; ++i) {
    words.push_back({numbered("ct", i, 4), WordClass::kContent, content_tags[i % 4],
                     std::floor(2000.0 / std::pow(static_cast<double>(i + 1), 0.8))});
  }
  return words;
}

double across_trial_variance(const Tensor& clean) {
  const std::size_t n = clean.dim(0), per = clean.size() / std::max<std::size_t>(n, 1);
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < per; ++e) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = clean[i * per + e];
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    total += sum_sq / static_cast<double>(n) - mean * mean;
  }
  return total / static_cast<double>(per);
}

}  // namespace

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SynthOutput out;

  const std::vector<Word> vocab = make_vocabulary(config);
  for (const auto& w : vocab) out.counts[w.token] = w.count;

  out.embeddings.dimension = config.embedding_dim;
  for (const auto& w : vocab) {
    std::vector<double> v(config.embedding_dim);
    for (double& x : v) x = normal(rng);
    v[0] += w.word_class == WordClass::kContent ? 1.5 : -1.5;
    out.embeddings.entries[w.token] = std::move(v);
  }

  // sentences: class first, then a count-weighted draw within the class
  std::vector<std::size_t> function_ids, content_ids;
  std::vector<double> function_w, content_w;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto& ids = vocab[i].word_class == WordClass::kFunction ? function_ids : content_ids;
    auto& ws = vocab[i].word_class == WordClass::kFunction ? function_w : content_w;
    ids.push_back(i);
    ws.push_back(vocab[i].count);
  }
  std::bernoulli_distribution is_function(config.function_word_share);
  std::discrete_distribution<std::size_t> pick_function(function_w.begin(), function_w.end());
  std::discrete_distribution<std::size_t> pick_content(content_w.begin(), content_w.end());
  std::vector<std::vector<std::size_t>> sentences(config.n_sentences);
  for (auto& s : sentences) {
    for (std::size_t p = 0; p < config.words_per_sentence; ++p) {
      s.push_back(is_function(rng) ? function_ids[pick_function(rng)] : content_ids[pick_content(rng)]);
    }
  }

  // language-model table: surprisal tracks log frequency plus noise; contextual vectors mix
  // the word's embedding with the mean of its left context
  double total = 0.0;
  for (const auto& w : vocab) total += w.count;
  const std::size_t e_dim = config.embedding_dim, c_dim = config.contextual_dim;
  Eigen::MatrixXd a(c_dim, e_dim), b(c_dim, e_dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng) / std::sqrt(static_cast<double>(e_dim));
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng) / std::sqrt(static_cast<double>(e_dim));
  out.lm_table.columns = {{"surprisal", 1}, {"contextual", c_dim}};
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    Eigen::VectorXd context_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e_dim));
    for (std::size_t p = 0; p < sentences[s].size(); ++p) {
      const Word& w = vocab[sentences[s][p]];
      const double surprisal =
          std::max(0.0, 0.6 * -std::log(w.count / total) + (p == 0 ? 1.0 : 0.0) + 1.2 * normal(rng));
      const Eigen::Map<const Eigen::VectorXd> emb(out.embeddings.entries.at(w.token).data(),
                                                   static_cast<Eigen::Index>(e_dim));
      Eigen::VectorXd pre = a * emb;
      if (p > 0) pre += b * (context_sum / static_cast<double>(p));
      std::vector<double> row{surprisal};
      for (Eigen::Index k = 0; k < pre.size(); ++k) row.push_back(std::tanh(pre[k]) + 0.1 * normal(rng));
      out.lm_table.rows[TokenKey{static_cast<int>(s + 1), static_cast<int>(p + 1)}] = std::move(row);
      context_sum += emb;
    }
  }

  std::vector<std::string> subjects;
  for (std::size_t i = 0; i < config.n_subjects; ++i) subjects.push_back(numbered("s", i + 1, 2));
  std::bernoulli_distribution artifact(config.artifact_rate);
  for (const auto& subject : subjects) {
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      for (std::size_t p = 0; p < sentences[s].size(); ++p) {
        const Word& w = vocab[sentences[s][p]];
        out.meta.push_back(TrialMeta{subject, static_cast<int>(s + 1), static_cast<int>(p + 1), w.token,
                                     w.word_class, w.pos_tag, artifact(rng)});
      }
    }
  }
  const std::size_t n = out.meta.size();

  GroundTruth& truth = out.truth;
  truth.drivers = config.drivers;
  const SentenceIndex sentence_index(out.meta);
  FeatureResources resources;
  resources.counts = &out.counts;
  resources.lm_table = &out.lm_table;
  resources.embeddings = &out.embeddings;
  resources.sentences = &sentence_index;
  // drivers exist for modelled trials only; sentence-initial words sit at the standardized mean
  std::vector<TrialMeta> modelled;
  std::vector<std::size_t> modelled_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.meta[i].word_position >= 2) {
      modelled.push_back(out.meta[i]);
      modelled_rows.push_back(i);
    }
  }
  std::vector<std::size_t> fit_rows(modelled.size());
  for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = i;
  for (FeatureSource source : config.drivers.sources) {
    DriverBlock block{source, {}, {}};
    if (modelled.empty()) {
      block.names = {to_string(source)};
      block.values.assign(n, 0.0);
    } else {
      const FeatureMatrix raw = assemble(FeatureSpec{{source}}, modelled, resources);
      const FeatureMatrix z = apply_standardizer(raw, fit_standardizer(raw, fit_rows));
      block.names = z.names;
      block.values.assign(n * block.width(), 0.0);
      for (std::size_t i = 0; i < modelled_rows.size(); ++i) {
        std::copy_n(z.values.begin() + static_cast<std::ptrdiff_t>(i * block.width()), block.width(),
                    block.values.begin() + static_cast<std::ptrdiff_t>(modelled_rows[i] * block.width()));
      }
    }
    truth.blocks.push_back(std::move(block));
  }

  const AutoencoderSpec ae_spec{config.architecture, config.intercepts, config.n_channels, config.n_timepoints};
  truth.decoder = init_autoencoder(ae_spec, subjects, config.seed ^ 0xdec0de5eedULL);
  truth.decoder.has_encoder = false;
  for (auto& layer : truth.decoder.encoder) layer = ConvParams{};
  if (config.intercepts) {
    for (double& v : truth.decoder.intercepts.values()) v = config.subject_offset_sd * normal(rng);
  }

  const std::size_t c_lat = truth.decoder.plan.latent_channels, t_lat = truth.decoder.plan.latent_timepoints;
  std::size_t d_in = 0;
  for (const auto& blk : truth.blocks) d_in += blk.width();
  truth.interface.weight = Tensor({c_lat, t_lat, d_in});
  truth.interface.bias = Tensor({c_lat, t_lat});
  const double stride = static_cast<double>(config.n_timepoints) / static_cast<double>(t_lat);
  for (std::size_t c = 0; c < c_lat; ++c) {
    for (std::size_t t = 0; t < t_lat; ++t) {
      const double centre_ms =
          config.epoch_start_ms + 1000.0 * ((static_cast<double>(t) + 0.5) * stride - 0.5) / config.sampling_rate_hz;
      const bool active = !config.active_window_ms ||
                          (centre_ms >= config.active_window_ms->first && centre_ms <= config.active_window_ms->second);
      truth.interface.bias.at(c, t) = config.bias_scale * normal(rng);
      std::size_t col = 0;
      for (const auto& blk : truth.blocks) {
        // each driver block contributes about weight_scale^2 / n_blocks latent variance
        const double sd = config.weight_scale /
                          std::sqrt(static_cast<double>(truth.blocks.size()) * static_cast<double>(blk.width()));
        for (std::size_t j = 0; j < blk.width(); ++j, ++col) {
          const double w = sd * normal(rng);
          truth.interface.weight.at(c, t, col) = active ? w : 0.0;
        }
      }
    }
  }

  truth.latents = Tensor({n, c_lat, t_lat});
  truth.clean = Tensor({n, config.n_channels, config.n_timepoints});
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor z = apply_interface(truth.interface, truth.design_row(i));
    truth.latents.set_slice(i, z);
    std::optional<std::string> subject;
    if (config.intercepts) subject = out.meta[i].subject_id;
    truth.clean.set_slice(i, decode(truth.decoder, z, subject));
  }

  truth.noise_sd = config.noise_sd;
  if (config.snr) truth.noise_sd = std::sqrt(across_trial_variance(truth.clean) / *config.snr);
  out.dataset.sampling_rate_hz = config.sampling_rate_hz;
  out.dataset.epoch_start_ms = config.epoch_start_ms;
  out.dataset.epoch_end_ms = config.epoch_end_ms();
  out.dataset.data = truth.clean;
  if (truth.noise_sd > 0.0) {
    for (double& v : out.dataset.data.values()) v += truth.noise_sd * normal(rng);
  }
  return out;
}

GroundTruth GroundTruth::select_trials(std::span<const std::size_t> rows) const {
  GroundTruth out;
  out.decoder = decoder;
  out.drivers = drivers;
  out.interface = interface;
  out.noise_sd = noise_sd;
  for (const auto& b : blocks) {
    DriverBlock sel{b.source, b.names, {}};
    for (std::size_t r : rows) {
      const auto first = b.values.begin() + static_cast<std::ptrdiff_t>(r * b.width());
      sel.values.insert(sel.values.end(), first, first + static_cast<std::ptrdiff_t>(b.width()));
    }
    out.blocks.push_back(std::move(sel));
  }
  const std::size_t n = rows.size();
  out.latents = Tensor({n, latents.dim(1), latents.dim(2)});
  out.clean = Tensor({n, clean.dim(1), clean.dim(2)});
  for (std::size_t i = 0; i < n; ++i) {
    out.latents.set_slice(i, latents.slice(rows[i]));
    out.clean.set_slice(i, clean.slice(rows[i]));
  }
  return out;
}

OracleBounds oracle_bounds(const GroundTruth& truth, const ErpDataset& dataset, const std::vector<TrialMeta>& meta,
                           const std::vector<FeatureSpec>& subsets, const std::vector<std::size_t>& train_rows,
                           const std::vector<std::size_t>& test_rows) {
  if (train_rows.empty() || test_rows.empty()) throw ConfigError("oracle_bounds: train and test rows are required");
  if (dataset.data.shape() != truth.clean.shape()) throw ShapeError("oracle_bounds: dataset does not match truth");
  const std::size_t c_lat = truth.latents.dim(1), t_lat = truth.latents.dim(2);
  const std::size_t n_lat = c_lat * t_lat;
  const std::size_t per = dataset.n_channels() * dataset.n_timepoints();

  auto subject_of = [&](std::size_t row) -> std::optional<std::string> {
    if (!truth.decoder.spec.intercepts) return std::nullopt;
    return meta.at(row).subject_id;
  };
  auto erp_sse = [&](std::size_t row, const Tensor& prediction) {
    const double* x = dataset.data.data() + row * per;
    double acc = 0.0;
    for (std::size_t j = 0; j < per; ++j) acc += (prediction[j] - x[j]) * (prediction[j] - x[j]);
    return acc;
  };

  OracleBounds bounds;
  double floor_sse = 0.0;
  for (std::size_t row : test_rows) floor_sse += erp_sse(row, truth.clean.slice(row));
  const double test_elems = static_cast<double>(test_rows.size() * per);
  bounds.mse_floor = floor_sse / test_elems;

  auto project = [&](const FeatureSpec& subset) {
    std::vector<std::size_t> cols;  // columns of the design row
    std::size_t offset = 0;
    for (const auto& blk : truth.blocks) {
      if (subset.has(blk.source)) {
        for (std::size_t j = 0; j < blk.width(); ++j) cols.push_back(offset + j);
      }
      offset += blk.width();
    }
    for (FeatureSource s : subset.sources) {
      if (s != FeatureSource::kConstant && !truth.drivers.has(s)) {
        throw ConfigError("oracle_bounds: " + to_string(s) + " is not a driving feature");
      }
    }
    const auto p = static_cast<Eigen::Index>(cols.size() + 1);
    auto design = [&](std::size_t row) {
      const std::vector<double> full = truth.design_row(row);
      Eigen::VectorXd x(p);
      x[0] = 1.0;
      for (std::size_t j = 0; j < cols.size(); ++j) x[static_cast<Eigen::Index>(j + 1)] = full[cols[j]];
      return x;
    };
    auto latent = [&](std::size_t row) {
      return Eigen::Map<const Eigen::VectorXd>(truth.latents.data() + row * n_lat, static_cast<Eigen::Index>(n_lat));
    };
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd xtz = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(n_lat));
    for (std::size_t row : train_rows) {
      const Eigen::VectorXd x = design(row);
      xtx.noalias() += x * x.transpose();
      xtz.noalias() += x * latent(row).transpose();
    }
    SubsetBound bound;
    bound.label = subset.sources.empty() ? "Intercept" : subset.label();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12) {
      bound.ridge_fallback = true;
      ldlt.compute(xtx + 1e-8 * Eigen::MatrixXd::Identity(p, p));
    }
    const Eigen::MatrixXd beta = ldlt.solve(xtz);  // p x n_lat
    double latent_sse = 0.0;
    for (std::size_t row : train_rows) {
      latent_sse += (beta.transpose() * design(row) - latent(row)).squaredNorm();
    }
    bound.latent_mse = latent_sse / static_cast<double>(train_rows.size() * n_lat);
    double sse = 0.0;
    for (std::size_t row : test_rows) {
      const Eigen::VectorXd z = beta.transpose() * design(row);
      Tensor zt({c_lat, t_lat}, std::vector<double>(z.data(), z.data() + z.size()));
      sse += erp_sse(row, decode(truth.decoder, zt, subject_of(row)));
    }
    bound.erp_mse = sse / test_elems;
    return bound;
  };

  bounds.intercept_mse = project(FeatureSpec{}).erp_mse;
  for (const auto& subset : subsets) {
    SubsetBound bound = project(subset);
    if (subset.has(FeatureSource::kConstant)) bound.label = "Intercept";
    bound.r2_mod = bounds.intercept_mse > bounds.mse_floor
                       ? r2_mod(bound.erp_mse, bounds.intercept_mse, bounds.mse_floor)
                       : std::numeric_limits<double>::quiet_NaN();
    bounds.subsets.push_back(std::move(bound));
  }
  return bounds;
}

}  // namespace erpkit
