// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

// Command-line driver. Progress goes to stderr, results to files under --out.
// Exit codes: 0 ok, 1 other failure, 2 usage, 3 missing/unreadable file, 4 format violation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "erpkit/autoencoder.hpp"
#include "erpkit/checkpoint.hpp"
#include "erpkit/dataio.hpp"
#include "erpkit/detail/io_util.hpp"
#include "erpkit/encoding_model.hpp"
#include "erpkit/error.hpp"
#include "erpkit/evaluate.hpp"
#include "erpkit/features.hpp"
#include "erpkit/log.hpp"
#include "erpkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace erpkit;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;

// ---------------------------------------------------------------------------
// options

struct TrainFlags {
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> wd;
  std::optional<double> dev_fraction;
};

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  TrainFlags train;

  std::string data;
  std::string decoder;
  std::string features;
  std::string model;
  std::string suite;
  std::string ceiling_latents;
  std::string arch = "beta";
  bool intercepts = false;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> window;
  std::string time_window;
};

const std::set<std::string> kConfigSections = {"synth", "train", "pretrain", "suite", "timecourse", "export_words"};

json load_config(const Options& opt) {
  if (opt.config.empty()) return json::object();
  const std::string text = detail::read_text_file(opt.config);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("config " + opt.config + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config " + opt.config + ": top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigSections.count(key)) throw ConfigError("config: unknown section '" + key + "'");
  }
  return j;
}

json section(const json& config, const char* name) {
  return config.contains(name) ? config.at(name) : json::object();
}

template <typename T>
T pick(const json& sec, const char* key, const std::optional<T>& flag, T fallback) {
  if (flag) return *flag;
  if (sec.contains(key)) {
    try {
      return sec.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
  return fallback;
}

void check_keys(const json& sec, const char* name, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : sec.items()) {
    if (!allowed.count(key)) throw ConfigError(std::string("config section '") + name + "': unknown key '" + key + "'");
  }
}

TrainConfig resolve_train(const json& config, const Options& opt, double default_wd) {
  const json sec = section(config, "train");
  check_keys(sec, "train", {"epochs", "batch_size", "lr", "weight_decay", "dev_fraction", "seed"});
  TrainConfig t;
  t.epochs = pick<int>(sec, "epochs", opt.train.epochs, t.epochs);
  t.batch_size = pick<std::size_t>(sec, "batch_size", opt.train.batch, t.batch_size);
  t.lr = pick<double>(sec, "lr", opt.train.lr, t.lr);
  t.weight_decay = pick<double>(sec, "weight_decay", opt.train.wd, default_wd);
  t.dev_fraction = pick<double>(sec, "dev_fraction", opt.train.dev_fraction, t.dev_fraction);
  t.seed = pick<std::uint64_t>(sec, "seed", opt.seed, t.seed);
  if (t.epochs < 1 || t.batch_size < 1) throw ConfigError("epochs and batch size must be >= 1");
  if (!(t.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (t.weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (!(t.dev_fraction >= 0.0 && t.dev_fraction < 1.0)) throw ConfigError("dev fraction must lie in [0, 1)");
  return t;
}

json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"dev_fraction", t.dev_fraction},
          {"seed", t.seed}};
}

// ---------------------------------------------------------------------------
// inputs and manifests

struct InputFile {
  std::string role;
  fs::path path;
};

class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void input(const std::string& role, const fs::path& path) {
    if (!fs::exists(path)) throw IoError("missing input file: " + path.string());
    inputs_.push_back({role, path});
  }
  void set_config(json resolved) { config_ = std::move(resolved); }
  void output(const fs::path& relative) { outputs_.push_back(relative.generic_string()); }

  void write(const fs::path& out_dir) const {
    json inputs = json::array();
    for (const auto& in : inputs_) {
      inputs.push_back({{"role", in.role}, {"path", in.path.generic_string()}, {"sha256", file_sha256(in.path)}});
    }
    std::vector<std::string> outputs = outputs_;
    std::sort(outputs.begin(), outputs.end());
    const json manifest = {{"tool", "erpkit"},
                           {"subcommand", subcommand_},
                           {"config", config_},
                           {"inputs", inputs},
                           {"outputs", outputs}};
    detail::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  json config_ = json::object();
  std::vector<InputFile> inputs_;
  std::vector<std::string> outputs_;
};

json read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  try {
    return json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string manifest_input(const json& manifest, const std::string& role) {
  for (const auto& in : manifest.value("inputs", json::array())) {
    if (in.value("role", "") == role) return in.value("path", "");
  }
  return {};
}

fs::path strip_suffix(const fs::path& p, const std::string& suffix) {
  const std::string s = p.string();
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return s.substr(0, s.size() - suffix.size());
  }
  return p;
}

// Directory arguments resolve to the conventional file stem inside them.
bool names_directory(const std::string& arg) { return fs::is_directory(arg) || (!arg.empty() && arg.back() == '/'); }

fs::path data_stem(const std::string& arg) {
  if (names_directory(arg)) return fs::path(arg) / "data";
  return strip_suffix(strip_suffix(arg, ".erp.json"), ".erp.bin");
}

fs::path checkpoint_stem(const std::string& arg, const char* name) {
  if (names_directory(arg)) return fs::path(arg) / name;
  return strip_suffix(strip_suffix(arg, ".ckpt.json"), ".ckpt.bin");
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) { return fs::path(stem.string() + suffix); }

void add_data_inputs(Manifest& manifest, const fs::path& stem) {
  manifest.input("data", with_suffix(stem, ".erp.json"));
  manifest.input("data_payload", with_suffix(stem, ".erp.bin"));
  if (fs::exists(with_suffix(stem, ".meta.tsv"))) manifest.input("meta", with_suffix(stem, ".meta.tsv"));
}

void add_checkpoint_inputs(Manifest& manifest, const std::string& role, const fs::path& stem) {
  manifest.input(role, with_suffix(stem, ".ckpt.json"));
  manifest.input(role + "_payload", with_suffix(stem, ".ckpt.bin"));
}

// Data inputs shared by the modelling subcommands.
struct Corpus {
  LoadedErp raw;
  FilteredTrials trials;  // artifacts and sentence-initial words removed
  SentenceIndex sentences;
  std::optional<FrequencyCounts> counts;
  std::optional<EmbeddingTable> embeddings;
  std::optional<TokenFeatureTable> lm_table;
  std::optional<TokenFeatureTable> custom_table;

  FeatureResources resources() const {
    FeatureResources r;
    if (counts) r.counts = &*counts;
    if (embeddings) r.embeddings = &*embeddings;
    if (lm_table) r.lm_table = &*lm_table;
    if (custom_table) r.custom_table = &*custom_table;
    r.sentences = &sentences;
    return r;
  }
};

// Registers every file the corpus will read; called before any compute.
void register_corpus(Manifest& manifest, const fs::path& stem, const std::string& custom_table) {
  add_data_inputs(manifest, stem);
  if (!fs::exists(with_suffix(stem, ".meta.tsv"))) {
    throw IoError("missing trial metadata: " + with_suffix(stem, ".meta.tsv").string());
  }
  const fs::path dir = stem.parent_path();
  for (const char* name : {"counts.tsv", "embeddings.txt", "lm.feat.tsv"}) {
    if (fs::exists(dir / name)) manifest.input(name, dir / name);
  }
  if (!custom_table.empty()) manifest.input("features", custom_table);
}

Corpus load_corpus(const fs::path& stem, const std::string& custom_table) {
  Corpus c;
  c.raw = load_erp(stem);
  c.trials = filter_artifacts(c.raw.dataset, c.raw.meta, false);
  if (c.trials.meta.empty()) throw ConfigError("no trials left after artifact and first-word filtering");
  c.sentences = SentenceIndex(c.raw.meta);
  const fs::path dir = stem.parent_path();
  if (fs::exists(dir / "counts.tsv")) c.counts = load_counts(dir / "counts.tsv");
  if (fs::exists(dir / "embeddings.txt")) c.embeddings = load_embeddings(dir / "embeddings.txt");
  if (fs::exists(dir / "lm.feat.tsv")) c.lm_table = load_token_features(dir / "lm.feat.tsv");
  if (!custom_table.empty()) c.custom_table = load_token_features(custom_table);
  log::info("data: " + std::to_string(c.raw.dataset.n_trials()) + " trials, " +
            std::to_string(c.trials.meta.size()) + " after filtering");
  return c;
}

void write_history(const fs::path& path, const std::vector<EpochRecord>& history, int best_epoch) {
  std::ostringstream out;
  out << "# best_epoch: " << best_epoch << "\n";
  out << "epoch\ttrain_mse\tdev_mse\n";
  for (const auto& r : history) {
    out << r.epoch << '\t' << format_double(r.train_mse) << '\t' << format_double(r.dev_mse) << '\n';
  }
  detail::write_text_file(path, out.str());
}

std::string safe_name(const std::string& name) {
  std::string out = name;
  std::replace(out.begin(), out.end(), '+', '_');
  return out;
}

fs::path require_out(const Options& opt) {
  if (opt.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(opt.out);
  return opt.out;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const Options& opt) {
  const json config = load_config(opt);
  Manifest manifest("synth");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  json synth_json = section(config, "synth");
  if (opt.seed) synth_json["seed"] = *opt.seed;
  const SynthConfig sc = synth_config_from_json(synth_json);
  const fs::path out = require_out(opt);
  manifest.set_config({{"synth", to_json(sc)}});

  log::info("synth: generating " + std::to_string(sc.n_trials()) + " trials");
  const SynthOutput s = generate(sc);
  save_erp(out / "data", s.dataset, &s.meta);
  save_counts(out / "counts.tsv", s.counts);
  save_embeddings(out / "embeddings.txt", s.embeddings);
  save_token_features(out / "lm.feat.tsv", s.lm_table);
  save_checkpoint(out / "truth" / "decoder", to_checkpoint(s.truth.decoder));

  Checkpoint truth;
  truth.kind = "synth_truth";
  truth.meta = {{"drivers", s.truth.drivers.label()}, {"noise_sd", s.truth.noise_sd}};
  truth.tensors.push_back({"latents", s.truth.latents});
  truth.tensors.push_back({"interface.weight", s.truth.interface.weight});
  truth.tensors.push_back({"interface.bias", s.truth.interface.bias});
  save_checkpoint(out / "truth" / "truth", truth);

  for (const char* f : {"data.erp.json", "data.erp.bin", "data.meta.tsv", "counts.tsv", "embeddings.txt",
                        "lm.feat.tsv", "truth/decoder.ckpt.json", "truth/decoder.ckpt.bin", "truth/truth.ckpt.json",
                        "truth/truth.ckpt.bin"}) {
    manifest.output(f);
  }
  manifest.write(out);
  log::info("synth: noise sd " + format_double(s.truth.noise_sd) + ", wrote " + out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain / select-arch

AutoencoderSpec resolve_arch(const json& config, const Options& opt, const ErpDataset& ds,
                             const CLI::App& app) {
  const json sec = section(config, "pretrain");
  check_keys(sec, "pretrain", {"architecture", "intercepts"});
  AutoencoderSpec spec;
  const bool arch_flag = app.count("--arch") > 0;
  spec.architecture = parse_architecture(arch_flag ? opt.arch : sec.value("architecture", opt.arch));
  spec.intercepts = opt.intercepts || sec.value("intercepts", false);
  spec.channels = ds.n_channels();
  spec.timepoints = ds.n_timepoints();
  return spec;
}

int run_pretrain(const Options& opt, const CLI::App& app) {
  if (opt.data.empty()) throw ConfigError("--data is required");
  const json config = load_config(opt);
  Manifest manifest("pretrain");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const fs::path stem = data_stem(opt.data);
  add_data_inputs(manifest, stem);
  const TrainConfig train = resolve_train(config, opt, 0.0);
  const fs::path out = require_out(opt);

  const LoadedErp raw = load_erp(stem);
  const FilteredTrials trials = raw.meta.empty() ? FilteredTrials{raw.dataset, {}, {}}
                                                 : filter_artifacts(raw.dataset, raw.meta, false);
  const AutoencoderSpec spec = resolve_arch(config, opt, raw.dataset, app);
  manifest.set_config({{"train", to_json(train)},
                       {"pretrain", {{"architecture", to_string(spec.architecture)}, {"intercepts", spec.intercepts}}}});

  log::info("pretrain: " + spec.label() + " on " + std::to_string(trials.dataset.n_trials()) + " trials");
  const PretrainResult result = pretrain(spec, trials.dataset, trials.meta, train);
  std::vector<std::size_t> all(trials.dataset.n_trials());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const ReconstructionScore score = score_reconstruction(result.params, trials.dataset, trials.meta, all);

  save_checkpoint(out / "autoencoder", to_checkpoint(result.params));
  write_history(out / "history.tsv", result.history, result.best_epoch);
  const json summary = {{"architecture", spec.label()},
                        {"latent", {result.params.plan.latent_channels, result.params.plan.latent_timepoints}},
                        {"n_trials", trials.dataset.n_trials()},
                        {"best_epoch", result.best_epoch},
                        {"mse", score.mse},
                        {"r2", score.r2},
                        {"decoder_hash", decoder_hash(result.params)}};
  detail::write_text_file(out / "summary.json", summary.dump(2) + "\n");
  for (const char* f : {"autoencoder.ckpt.json", "autoencoder.ckpt.bin", "history.tsv", "summary.json"}) {
    manifest.output(f);
  }
  manifest.write(out);
  log::info("pretrain: best epoch " + std::to_string(result.best_epoch) + ", MSE " + format_double(score.mse) +
            ", R2 " + format_double(score.r2));
  return 0;
}

int run_select_arch(const Options& opt) {
  if (opt.data.empty()) throw ConfigError("--data is required");
  const json config = load_config(opt);
  Manifest manifest("select-arch");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const fs::path stem = data_stem(opt.data);
  add_data_inputs(manifest, stem);
  const TrainConfig train = resolve_train(config, opt, 0.0);
  const std::size_t k = opt.folds.value_or(5);
  const fs::path out = require_out(opt);

  const LoadedErp raw = load_erp(stem);
  const FilteredTrials trials = raw.meta.empty() ? FilteredTrials{raw.dataset, {}, {}}
                                                 : filter_artifacts(raw.dataset, raw.meta, false);
  std::vector<AutoencoderSpec> candidates;
  for (Architecture arch : {Architecture::kAlpha, Architecture::kBeta}) {
    AutoencoderSpec spec{arch, opt.intercepts, trials.dataset.n_channels(), trials.dataset.n_timepoints()};
    try {
      build_layer_plan(spec);
      candidates.push_back(spec);
    } catch (const ShapeError& e) {
      log::warn("select-arch: skipping " + spec.label() + ": " + e.what());
    }
  }
  manifest.set_config({{"train", to_json(train)}, {"folds", k}, {"intercepts", opt.intercepts}});
  const SelectionReport report = select_architecture(trials.dataset, trials.meta, candidates, k, train);

  std::ostringstream table;
  table << "# mean over " << k << " folds of held-out reconstruction error\n";
  table << "architecture\tmean_mse\tmean_r2\n";
  json j = {{"folds", k}, {"winner", report.candidates[report.winner].spec.label()}, {"candidates", json::array()}};
  for (const auto& c : report.candidates) {
    table << c.spec.label() << '\t' << format_double(c.mean_mse) << '\t' << format_double(c.mean_r2) << '\n';
    j["candidates"].push_back({{"architecture", c.spec.label()},
                               {"mean_mse", c.mean_mse},
                               {"mean_r2", c.mean_r2},
                               {"fold_mse", c.fold_mse},
                               {"fold_r2", c.fold_r2}});
  }
  detail::write_text_file(out / "selection.tsv", table.str());
  detail::write_text_file(out / "selection.json", j.dump(2) + "\n");
  manifest.output("selection.tsv");
  manifest.output("selection.json");
  manifest.write(out);
  return 0;
}

// ---------------------------------------------------------------------------
// fit

// --data, else the data the decoder was pretrained on.
fs::path resolve_data(const Options& opt, const std::string& upstream_dir) {
  if (!opt.data.empty()) return data_stem(opt.data);
  if (!upstream_dir.empty() && fs::is_directory(upstream_dir) && fs::exists(fs::path(upstream_dir) / "manifest.json")) {
    const std::string recorded = manifest_input(read_manifest(upstream_dir), "data");
    if (!recorded.empty()) return strip_suffix(recorded, ".erp.json");
  }
  throw ConfigError("--data is required (no upstream manifest records the data)");
}

int run_fit(const Options& opt) {
  if (opt.decoder.empty()) throw ConfigError("--decoder is required");
  const json config = load_config(opt);
  Manifest manifest("fit");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const fs::path decoder_stem = checkpoint_stem(opt.decoder, "autoencoder");
  add_checkpoint_inputs(manifest, "decoder", decoder_stem);
  const fs::path stem = resolve_data(opt, opt.decoder);
  register_corpus(manifest, stem, opt.features);

  std::string spec_text = opt.model;
  if (spec_text.empty()) spec_text = opt.features.empty() ? "F+S+SD" : "Table";
  if (!opt.features.empty() && spec_text.find("Table") == std::string::npos) spec_text += "+Table";
  const FeatureSpec features_spec = parse_feature_spec(spec_text);
  const TrainConfig train = resolve_train(config, opt, 1e-5);
  const json suite_sec = section(config, "suite");
  TunerConfig tuner;
  tuner.hidden_size = suite_sec.value("tuner_hidden", tuner.hidden_size);
  const fs::path out = require_out(opt);
  manifest.set_config({{"train", to_json(train)}, {"features", features_spec.label()},
                       {"tuner_hidden", tuner.hidden_size}});

  const AutoencoderParams decoder = autoencoder_from_checkpoint(load_checkpoint(decoder_stem));
  const Corpus corpus = load_corpus(stem, opt.features);
  const FeatureMatrix features = assemble(features_spec, corpus.trials.meta, corpus.resources());
  log::info("fit: " + features_spec.label() + " with " + std::to_string(features.n_cols()) + " feature columns");
  TrainedEncodingModel trained = train_encoding_model(decoder, EncodingModelSpec{features_spec, tuner},
                                                      corpus.trials.dataset, corpus.trials.meta, features, train);
  trained.model.decoder_ref = decoder_stem.generic_string();
  if (decoder_hash(decoder) != trained.model.decoder_hash) throw Error("decoder hash changed during fit");

  save_checkpoint(out / "model", to_checkpoint(trained.model));
  write_history(out / "history.tsv", trained.history.epochs, trained.history.best_epoch);
  const auto& best = trained.history.epochs.at(static_cast<std::size_t>(trained.history.best_epoch - 1));
  const json summary = {{"features", features_spec.label()},
                        {"feature_columns", features.names},
                        {"n_trials", corpus.trials.meta.size()},
                        {"weight_decay", train.weight_decay},
                        {"best_epoch", trained.history.best_epoch},
                        {"restored_to_best", trained.history.restored_to_best},
                        {"train_mse", best.train_mse},
                        {"dev_mse", best.dev_mse},
                        {"decoder_hash", trained.model.decoder_hash}};
  detail::write_text_file(out / "summary.json", summary.dump(2) + "\n");
  for (const char* f : {"model.ckpt.json", "model.ckpt.bin", "history.tsv", "summary.json"}) manifest.output(f);
  manifest.write(out);
  log::info("fit: best epoch " + std::to_string(trained.history.best_epoch) + ", dev MSE " +
            format_double(best.dev_mse));
  return 0;
}

// ---------------------------------------------------------------------------
// suite

std::vector<SuiteEntry> resolve_roster(const json& sec) {
  if (!sec.contains("roster")) return default_roster();
  std::vector<SuiteEntry> roster;
  for (const auto& item : sec.at("roster")) {
    const FeatureSpec spec = parse_feature_spec(item.get<std::string>());
    roster.push_back({spec.label(), spec});
  }
  return roster;
}

// Per-trial squared error of the ceiling: autoencoder reconstruction, or decoded reference latents.
std::vector<double> ceiling_sse(const AutoencoderParams& decoder, const Corpus& corpus,
                                const std::optional<Checkpoint>& reference) {
  if (!reference) {
    if (!decoder.has_encoder) {
      throw ConfigError("the decoder checkpoint has no encoder; pass --ceiling-latents for the ceiling");
    }
    return reconstruction_sse(decoder, corpus.trials.dataset, corpus.trials.meta);
  }
  const Tensor& latents = reference->get("latents");
  if (latents.dim(0) != corpus.raw.dataset.n_trials()) {
    throw ShapeError("ceiling latents cover " + std::to_string(latents.dim(0)) + " trials, data has " +
                     std::to_string(corpus.raw.dataset.n_trials()));
  }
  const ErpDataset& ds = corpus.trials.dataset;
  std::vector<double> sse(ds.n_trials());
  for (std::size_t i = 0; i < ds.n_trials(); ++i) {
    std::optional<std::string> subject;
    if (decoder.spec.intercepts) subject = corpus.trials.meta[i].subject_id;
    const Tensor y = decode(decoder, latents.slice(corpus.trials.kept[i]), subject);
    const Tensor x = ds.data.slice(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += (y[j] - x[j]) * (y[j] - x[j]);
    sse[i] = acc;
  }
  return sse;
}

int run_suite(const Options& opt) {
  if (opt.decoder.empty()) throw ConfigError("--decoder is required");
  const json config = load_config(opt);
  Manifest manifest("suite");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const fs::path decoder_stem = checkpoint_stem(opt.decoder, "autoencoder");
  add_checkpoint_inputs(manifest, "decoder", decoder_stem);
  const fs::path stem = resolve_data(opt, opt.decoder);
  register_corpus(manifest, stem, opt.features);
  fs::path ceiling_stem;
  if (!opt.ceiling_latents.empty()) {
    ceiling_stem = checkpoint_stem(opt.ceiling_latents, "truth");
    add_checkpoint_inputs(manifest, "ceiling", ceiling_stem);
  }

  const json sec = section(config, "suite");
  check_keys(sec, "suite", {"folds", "weight_decay_grid", "roster", "n_boot", "alpha", "tuner_hidden"});
  SuiteConfig sc;
  try {
    sc.roster = resolve_roster(sec);
    sc.weight_decay_grid = sec.value("weight_decay_grid", sc.weight_decay_grid);
    sc.folds = opt.folds.value_or(sec.value("folds", sc.folds));
    sc.n_boot = sec.value("n_boot", sc.n_boot);
    sc.alpha = sec.value("alpha", sc.alpha);
    sc.tuner.hidden_size = sec.value("tuner_hidden", sc.tuner.hidden_size);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config section 'suite': ") + e.what());
  }
  if (!opt.features.empty()) sc.roster.push_back({"Table", FeatureSpec{{FeatureSource::kTable}}});
  sc.train = resolve_train(config, opt, 0.0);
  const fs::path out = require_out(opt);
  json roster_json = json::array();
  for (const auto& e : sc.roster) roster_json.push_back(e.spec.label());
  manifest.set_config({{"train", to_json(sc.train)},
                       {"suite",
                        {{"folds", sc.folds},
                         {"weight_decay_grid", sc.weight_decay_grid},
                         {"roster", roster_json},
                         {"n_boot", sc.n_boot},
                         {"alpha", sc.alpha},
                         {"tuner_hidden", sc.tuner.hidden_size}}}});

  const AutoencoderParams decoder = autoencoder_from_checkpoint(load_checkpoint(decoder_stem));
  const Corpus corpus = load_corpus(stem, opt.features);
  std::optional<Checkpoint> reference;
  if (!ceiling_stem.empty()) reference = load_checkpoint(ceiling_stem);

  SuiteInputs inputs;
  inputs.decoder = &decoder;
  inputs.dataset = &corpus.trials.dataset;
  inputs.meta = &corpus.trials.meta;
  inputs.resources = corpus.resources();
  inputs.ceiling_sse = ceiling_sse(decoder, corpus, reference);
  const SuiteResult result = run_model_suite(sc, inputs);

  json models = json::array();
  for (const auto& m : result.models) {
    const fs::path dir = fs::path("models") / safe_name(m.name);
    for (std::size_t fold = 0; fold < m.search.fold_models.size(); ++fold) {
      EncodingModel fm = m.search.fold_models[fold];
      fm.decoder_ref = decoder_stem.generic_string();
      const fs::path ck = dir / ("fold" + std::to_string(fold));
      save_checkpoint(out / ck, to_checkpoint(fm));
      manifest.output(with_suffix(ck, ".ckpt.json"));
      manifest.output(with_suffix(ck, ".ckpt.bin"));
    }
    models.push_back({{"name", m.name},
                      {"label", m.label},
                      {"dir", dir.generic_string()},
                      {"weight_decay_grid", sc.weight_decay_grid},
                      {"fold_test_mse", m.search.fold_test_mse},
                      {"mean_mse", m.search.mean_mse},
                      {"chosen_weight_decay", m.search.chosen},
                      {"fold_mse_model", m.report.fold_mse_model},
                      {"fold_mse_intercept", m.report.fold_mse_intercept},
                      {"fold_mse_autoencoder", m.report.fold_mse_autoencoder}});
  }
  const json suite_json = {{"fold_hash", result.fold_hash},
                           {"folds", result.folds.k},
                           {"fold_seed", sc.train.seed},
                           {"n_trials", result.folds.n_items},
                           {"models", models},
                           {"skipped", result.skipped}};
  detail::write_text_file(out / "suite.json", suite_json.dump(2) + "\n");
  manifest.output("suite.json");
  manifest.write(out);
  log::info("suite: " + std::to_string(result.models.size()) + " models, fold hash " + result.fold_hash);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / timecourse / export-words (all read a suite directory)

struct SuiteRun {
  fs::path dir;
  json suite;
  json manifest;
  std::size_t n_boot = 10000;
  double alpha = 0.05;
};

SuiteRun read_suite(const Options& opt, Manifest& manifest) {
  if (opt.suite.empty()) throw ConfigError("--suite is required");
  SuiteRun run;
  run.dir = opt.suite;
  manifest.input("suite", run.dir / "suite.json");
  manifest.input("suite_manifest", run.dir / "manifest.json");
  try {
    run.suite = json::parse(detail::read_text_file(run.dir / "suite.json"));
  } catch (const json::parse_error& e) {
    throw FormatError((run.dir / "suite.json").string() + ": " + e.what());
  }
  run.manifest = read_manifest(run.dir);
  const json sec = run.manifest.at("config").value("suite", json::object());
  run.n_boot = sec.value("n_boot", run.n_boot);
  run.alpha = sec.value("alpha", run.alpha);
  return run;
}

int run_evaluate(const Options& opt) {
  const json config = load_config(opt);
  Manifest manifest("evaluate");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const SuiteRun run = read_suite(opt, manifest);
  const std::uint64_t seed = opt.seed.value_or(run.suite.value("fold_seed", std::uint64_t{0}));
  const fs::path out = require_out(opt);
  manifest.set_config({{"seed", seed}, {"n_boot", run.n_boot}, {"alpha", run.alpha}});

  std::ostringstream table;
  table << "# r2_mod: 1 - (mse_model - mse_autoencoder) / (mse_intercept - mse_autoencoder), fold-mean MSEs\n"
        << "# ci_low, ci_high: percentile bootstrap over per-fold r2_mod, " << run.n_boot << " resamples, alpha "
        << format_double(run.alpha) << "\n";
  table << "model\tr2_mod\tci_low\tci_high\tmse_model\tmse_intercept\tmse_autoencoder\tweight_decay\n";
  json reports = json::array();
  for (const auto& m : run.suite.at("models")) {
    EvalReport r = make_report(m.at("name").get<std::string>(), m.at("fold_mse_model").get<std::vector<double>>(),
                               m.at("fold_mse_intercept").get<std::vector<double>>(),
                               m.at("fold_mse_autoencoder").get<std::vector<double>>(), run.n_boot, run.alpha, seed);
    r.weight_decay = m.at("chosen_weight_decay").get<double>();
    table << r.model << '\t' << format_double(r.r2_mod) << '\t' << format_double(r.ci_low) << '\t'
          << format_double(r.ci_high) << '\t' << format_double(r.mse_model) << '\t' << format_double(r.mse_intercept)
          << '\t' << format_double(r.mse_autoencoder) << '\t' << format_double(r.weight_decay) << '\n';
    reports.push_back(r.to_json());
  }
  detail::write_text_file(out / "table.tsv", table.str());
  detail::write_text_file(out / "reports.json", json{{"fold_hash", run.suite.at("fold_hash")}, {"reports", reports}}.dump(2) + "\n");
  manifest.output("table.tsv");
  manifest.output("reports.json");
  manifest.write(out);
  return 0;
}

// Reloads what the suite trained on and rebuilds out-of-fold predictions.
struct SuiteReplay {
  AutoencoderParams decoder;
  Corpus corpus;
  FoldAssignment folds;
};

SuiteReplay replay_inputs(const Options& opt, const SuiteRun& run, Manifest& manifest) {
  const std::string decoder_arg = opt.decoder.empty() ? manifest_input(run.manifest, "decoder") : opt.decoder;
  if (decoder_arg.empty()) throw ConfigError("--decoder is required");
  const fs::path decoder_stem = checkpoint_stem(decoder_arg, "autoencoder");
  add_checkpoint_inputs(manifest, "decoder", decoder_stem);
  const fs::path stem = opt.data.empty() ? strip_suffix(manifest_input(run.manifest, "data"), ".erp.json")
                                         : data_stem(opt.data);
  const std::string table = manifest_input(run.manifest, "features");
  register_corpus(manifest, stem, table);

  SuiteReplay replay{autoencoder_from_checkpoint(load_checkpoint(decoder_stem)), load_corpus(stem, table), {}};
  const std::size_t k = run.suite.at("folds").get<std::size_t>();
  replay.folds = kfold_split(replay.corpus.trials.meta.size(), k, run.suite.at("fold_seed").get<std::uint64_t>());
  if (fold_assignment_hash(replay.folds) != run.suite.at("fold_hash").get<std::string>()) {
    throw FormatError("fold assignment hash does not match the suite; data or seed differ");
  }
  return replay;
}

const json& suite_model(const SuiteRun& run, const std::string& name) {
  for (const auto& m : run.suite.at("models")) {
    if (m.at("name").get<std::string>() == name || m.at("label").get<std::string>() == name) return m;
  }
  throw ConfigError("suite has no model named '" + name + "'");
}

Tensor replay_predictions(const SuiteRun& run, const SuiteReplay& replay, const json& model) {
  std::vector<EncodingModel> fold_models;
  const FeatureSpec spec = parse_feature_spec(model.at("label").get<std::string>());
  const FeatureMatrix features = assemble(spec, replay.corpus.trials.meta, replay.corpus.resources());
  for (std::size_t fold = 0; fold < replay.folds.k; ++fold) {
    const fs::path ck = run.dir / model.at("dir").get<std::string>() / ("fold" + std::to_string(fold));
    fold_models.push_back(encoding_model_from_checkpoint(load_checkpoint(ck), replay.decoder));
  }
  return out_of_fold_predictions(fold_models, replay.folds, features, replay.corpus.trials.meta);
}

void register_fold_checkpoints(Manifest& manifest, const SuiteRun& run, const json& model) {
  const std::size_t k = run.suite.at("folds").get<std::size_t>();
  for (std::size_t fold = 0; fold < k; ++fold) {
    const fs::path ck = run.dir / model.at("dir").get<std::string>() / ("fold" + std::to_string(fold));
    add_checkpoint_inputs(manifest, model.at("name").get<std::string>() + ".fold" + std::to_string(fold), ck);
  }
}

int run_timecourse(const Options& opt) {
  const json config = load_config(opt);
  Manifest manifest("timecourse");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const SuiteRun run = read_suite(opt, manifest);
  const json sec = section(config, "timecourse");
  check_keys(sec, "timecourse", {"window", "model"});
  const std::size_t window = opt.window.value_or(sec.value("window", std::size_t{9}));
  if (window % 2 == 0) throw ConfigError("--window must be odd");
  const std::string model_name = opt.model.empty() ? sec.value("model", std::string("F+S+SD+Ctx")) : opt.model;
  const json& model = suite_model(run, model_name);
  const json& intercept = suite_model(run, "Intercept");
  register_fold_checkpoints(manifest, run, model);
  register_fold_checkpoints(manifest, run, intercept);
  const SuiteReplay replay = replay_inputs(opt, run, manifest);
  const fs::path out = require_out(opt);
  manifest.set_config({{"model", model.at("name")}, {"window", window}});

  const Tensor preds = replay_predictions(run, replay, model);
  const Tensor base = replay_predictions(run, replay, intercept);
  TimecourseSeries series =
      timepoint_correlation_increase(preds, base, replay.corpus.trials.dataset.data, &replay.corpus.trials.dataset);
  series.smoothing_window = window;
  const std::vector<double> smoothed = moving_average_smooth(series.values, window);
  const std::string file = "timecourse_" + safe_name(model.at("name").get<std::string>()) + ".tsv";
  write_timecourse_tsv(out / file, series, smoothed);
  manifest.output(file);
  manifest.write(out);
  return 0;
}

ModelCoding coding_of(const FeatureSpec& spec) {
  auto flag = [&](FeatureSource s) { return spec.has(s) ? 1 : -1; };
  return ModelCoding{flag(FeatureSource::kFrequency), flag(FeatureSource::kSurprisal),
                     flag(FeatureSource::kSemanticDistance), flag(FeatureSource::kStaticEmbedding),
                     flag(FeatureSource::kContextualEmbedding)};
}

std::optional<TimeWindow> parse_time_window(const std::string& text, const ErpDataset& ds) {
  if (text.empty()) return std::nullopt;
  const auto parts = detail::split(text, ',');
  if (parts.size() != 2) throw ConfigError("--time-window expects 'start_ms,end_ms'");
  const double lo = parse_double(parts[0], "--time-window"), hi = parse_double(parts[1], "--time-window");
  TimeWindow w{ds.n_timepoints(), 0};
  for (std::size_t t = 0; t < ds.n_timepoints(); ++t) {
    if (ds.time_ms(t) >= lo && ds.time_ms(t) <= hi) {
      w.first = std::min(w.first, t);
      w.last = t + 1;
    }
  }
  if (w.last <= w.first) throw ConfigError("--time-window selects no timepoints");
  return w;
}

int run_export_words(const Options& opt) {
  const json config = load_config(opt);
  Manifest manifest("export-words");
  if (!opt.config.empty()) manifest.input("config", opt.config);
  const SuiteRun run = read_suite(opt, manifest);
  for (const auto& m : run.suite.at("models")) register_fold_checkpoints(manifest, run, m);
  const SuiteReplay replay = replay_inputs(opt, run, manifest);
  const fs::path out = require_out(opt);
  const std::optional<TimeWindow> window = parse_time_window(opt.time_window, replay.corpus.trials.dataset);
  manifest.set_config({{"time_window_ms", opt.time_window}});

  WordLevelTable all;
  for (const auto& m : run.suite.at("models")) {
    const std::string name = m.at("name").get<std::string>();
    const Tensor preds = replay_predictions(run, replay, m);
    const WordLevelTable t = per_word_correlations(name, coding_of(parse_feature_spec(m.at("label").get<std::string>())),
                                                   preds, replay.corpus.trials.dataset.data,
                                                   replay.corpus.trials.meta, window);
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
  }
  write_word_table_tsv(out / "words.tsv", all);
  std::ostringstream summary;
  summary << "# mean per-word Pearson r by word class\n";
  summary << "model\tword_class\tmean_r\tn\n";
  for (const auto& [model, classes] : content_function_summary(all)) {
    for (const auto& [cls, s] : classes) {
      summary << model << '\t' << cls << '\t' << format_double(s.mean_r) << '\t' << s.n << '\n';
    }
  }
  detail::write_text_file(out / "summary.tsv", summary.str());
  manifest.output("words.tsv");
  manifest.output("summary.tsv");
  manifest.write(out);
  return 0;
}

// ---------------------------------------------------------------------------

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << "erpkit: error[" << kind << "]: " << one_line(message) << std::endl;
  return code;
}

void add_train_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--epochs", opt.train.epochs, "Training epochs");
  cmd->add_option("--batch", opt.train.batch, "Mini-batch size");
  cmd->add_option("--lr", opt.train.lr, "Adam learning rate");
  cmd->add_option("--wd", opt.train.wd, "Weight decay (L2)");
  cmd->add_option("--dev-fraction", opt.train.dev_fraction, "Share of training rows held out for early stopping");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"erpkit: convolutional autoencoder and encoding-model toolkit for word-level ERPs"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "JSON config; flags override it");
  app.add_option("--seed", opt.seed, "Random seed");
  app.add_flag("--quiet", opt.quiet, "Only warnings and errors on stderr");

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config, "JSON config; flags override it");
    cmd->add_option("--out", opt.out, "Output directory")->required();
    cmd->add_option("--seed", opt.seed, "Random seed");
    cmd->add_flag("--quiet", opt.quiet, "Only warnings and errors on stderr");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known ground truth");
  common(synth);

  CLI::App* pre = app.add_subcommand("pretrain", "Pre-train a convolutional autoencoder");
  common(pre);
  pre->add_option("--data", opt.data, "ERP data directory or stem")->required();
  pre->add_option("--arch", opt.arch, "Architecture")->check(CLI::IsMember({"alpha", "beta"}));
  pre->add_flag("--intercepts", opt.intercepts, "Per-subject channel intercepts");
  add_train_flags(pre, opt);

  CLI::App* sel = app.add_subcommand("select-arch", "Cross-validate alpha and beta autoencoders");
  common(sel);
  sel->add_option("--data", opt.data, "ERP data directory or stem")->required();
  sel->add_option("--folds", opt.folds, "Number of folds");
  sel->add_flag("--intercepts", opt.intercepts, "Per-subject channel intercepts");
  add_train_flags(sel, opt);

  CLI::App* fit = app.add_subcommand("fit", "Train one encoding model on a frozen decoder");
  common(fit);
  fit->add_option("--decoder", opt.decoder, "Pretrain output directory or checkpoint stem")->required();
  fit->add_option("--features", opt.features, "Token feature table (TSV) used as model inputs");
  fit->add_option("--model", opt.model, "Feature spec such as F+S+SD (default F+S+SD, or the table)");
  fit->add_option("--data", opt.data, "ERP data; defaults to the data the decoder was trained on");
  add_train_flags(fit, opt);

  CLI::App* suite = app.add_subcommand("suite", "Cross-validated comparison of the model roster");
  common(suite);
  suite->add_option("--decoder", opt.decoder, "Pretrain output directory or checkpoint stem")->required();
  suite->add_option("--data", opt.data, "ERP data; defaults to the data the decoder was trained on");
  suite->add_option("--features", opt.features, "Extra token feature table fitted as model 'Table'");
  suite->add_option("--folds", opt.folds, "Number of folds");
  suite->add_option("--ceiling-latents", opt.ceiling_latents,
                    "Checkpoint with reference latents whose decoding defines the ceiling");
  add_train_flags(suite, opt);

  CLI::App* eval = app.add_subcommand("evaluate", "R2_mod table with bootstrap intervals from a suite run");
  common(eval);
  eval->add_option("--suite", opt.suite, "Suite output directory")->required();

  CLI::App* tc = app.add_subcommand("timecourse", "Per-timepoint correlation increase over the intercept model");
  common(tc);
  tc->add_option("--suite", opt.suite, "Suite output directory")->required();
  tc->add_option("--model", opt.model, "Model name from the suite");
  tc->add_option("--window", opt.window, "Odd moving-average window in samples (default 9)");
  tc->add_option("--data", opt.data, "ERP data; defaults to the suite's data");
  tc->add_option("--decoder", opt.decoder, "Decoder; defaults to the suite's decoder");

  CLI::App* ew = app.add_subcommand("export-words", "Per-word correlation table for every suite model");
  common(ew);
  ew->add_option("--suite", opt.suite, "Suite output directory")->required();
  ew->add_option("--time-window", opt.time_window, "Restrict r to 'start_ms,end_ms'");
  ew->add_option("--data", opt.data, "ERP data; defaults to the suite's data");
  ew->add_option("--decoder", opt.decoder, "Decoder; defaults to the suite's decoder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), kExitUsage);
  }
  log::set_level(opt.quiet ? log::Level::kWarn : log::Level::kInfo);

  try {
    if (*synth) return run_synth(opt);
    if (*pre) return run_pretrain(opt, *pre);
    if (*sel) return run_select_arch(opt);
    if (*fit) return run_fit(opt);
    if (*suite) return run_suite(opt);
    if (*eval) return run_evaluate(opt);
    if (*tc) return run_timecourse(opt);
    if (*ew) return run_export_words(opt);
  } catch (const IoError& e) {
    return fail(e.kind(), e.what(), kExitIo);
  } catch (const FormatError& e) {
    return fail(e.kind(), e.what(), kExitFormat);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitOther);
  } catch (const fs::filesystem_error& e) {
    return fail("io_error", e.what(), kExitIo);
  } catch (const std::exception& e) {
    return fail("error", e.what(), kExitOther);
  }
  return kExitOther;
}
