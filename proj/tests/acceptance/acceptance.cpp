// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>

#include "erpkit/autoencoder.hpp"
#include "erpkit/checkpoint.hpp"
#include "erpkit/encoding_model.hpp"
#include "erpkit/evaluate.hpp"
#include "erpkit/log.hpp"
#include "erpkit/synth.hpp"
#include "fixtures.hpp"
#include "gradient_cases.hpp"

namespace erpkit {
namespace {

namespace fs = std::filesystem;
using testing::Corpus;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. Every backward pass against central differences; conv/convT adjoint identity.
Outcome kernel_correctness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260101);
  double worst_fd = 0.0;
  std::string worst_case;
  const std::size_t n_cases = std::size(testing::kAllKernelCases);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto c = testing::kAllKernelCases[i % n_cases];
    const double err = testing::random_backward_check(c, rng);
    if (!(err <= worst_fd)) {
      worst_fd = err;
      worst_case = testing::to_string(c);
    }
  }
  double worst_adjoint = 0.0;
  for (int i = 0; i < 100; ++i) worst_adjoint = std::max(worst_adjoint, testing::random_adjoint_error(rng));
  const double elapsed = seconds_since(start);
  return {worst_fd < 1e-4 && worst_adjoint <= 1e-10 && elapsed < 30.0,
          "100 instances, max FD rel err " + fmt(worst_fd, 3) + " (" + worst_case + ", need < 1e-4); 100 adjoint checks, max rel err " +
              fmt(worst_adjoint, 3) + " (need <= 1e-10); " + fmt(elapsed, 3) + " s (need < 30)"};
}

// 2. Latent and reconstruction shapes for 32 x 200 input.
Outcome geometry() {
  std::mt19937_64 rng(2);
  const Tensor x = testing::random_tensor({32, 200}, rng);
  std::string detail;
  bool pass = true;
  for (auto [arch, want] : {std::pair{Architecture::kAlpha, Shape{5, 9}}, std::pair{Architecture::kBeta, Shape{10, 20}}}) {
    AutoencoderSpec spec;
    spec.architecture = arch;
    const AutoencoderParams p = init_autoencoder(spec, {}, 1);
    const Shape latent = encode(p, x).shape();
    const Shape recon = reconstruct(p, x).shape();
    pass = pass && latent == want && recon == Shape{32, 200};
    detail += to_string(arch) + " latent " + shape_to_string(latent) + " recon " + shape_to_string(recon) + "; ";
  }
  return {pass, detail + "need alpha 5x9, beta 10x20, recon 32x200"};
}

// 3. r2_mod anchors.
Outcome r2mod_anchors() {
  const double a = r2_mod(50.0, 50.0, 30.0), b = r2_mod(30.0, 50.0, 30.0), c = r2_mod(40.0, 50.0, 30.0);
  const bool pass = std::abs(a) <= 1e-12 && std::abs(b - 1.0) <= 1e-12 && std::abs(c - 0.5) <= 1e-12;
  return {pass, "intercept -> " + fmt(a, 17) + ", autoencoder -> " + fmt(b, 17) + ", (40,50,30) -> " + fmt(c, 17) +
                    " (tolerance 1e-12)"};
}

// 4. Decoder checkpoint bytes and hash unchanged by encoding-model training.
Outcome frozen_decoder() {
  testing::ScratchDir dir("acc4");
  SynthConfig cfg = testing::small_synth_config(40);
  const auto corpus = testing::make_corpus(cfg);
  AutoencoderSpec spec;
  spec.channels = cfg.n_channels;
  spec.timepoints = cfg.n_timepoints;
  TrainConfig train;
  train.epochs = 5;
  train.batch_size = 16;
  train.lr = 0.01;
  const PretrainResult ae = pretrain(spec, corpus->dataset(), corpus->meta(), train);
  save_checkpoint(dir / "decoder", to_checkpoint(ae.params));
  const std::string sha_before = file_sha256(dir / "decoder.ckpt.bin");
  const std::string manifest_before = file_sha256(dir / "decoder.ckpt.json");

  const AutoencoderParams decoder = autoencoder_from_checkpoint(load_checkpoint(dir / "decoder"));
  const std::string hash_before = decoder_hash(decoder);
  const FeatureMatrix f = corpus->features("F+S+SD+Ctx");
  train.epochs = 10;
  const auto trained =
      train_encoding_model(decoder, {parse_feature_spec("F+S+SD+Ctx"), {}}, corpus->dataset(), corpus->meta(), f, train);
  fs::create_directories(dir / "after");
  save_checkpoint(dir / "after" / "decoder", to_checkpoint(trained.model.decoder));
  const std::string sha_after = file_sha256(dir / "after" / "decoder.ckpt.bin");
  const bool pass = sha_after == sha_before && file_sha256(dir / "after" / "decoder.ckpt.json") == manifest_before &&
                    decoder_hash(trained.model.decoder) == hash_before && trained.model.decoder_hash == hash_before &&
                    file_sha256(dir / "decoder.ckpt.bin") == sha_before;
  return {pass, "checkpoint sha256 before " + sha_before.substr(0, 16) + "..., after " + sha_after.substr(0, 16) +
                    "...; decoder tensor hash " + (decoder_hash(trained.model.decoder) == hash_before ? "equal" : "DIFFERS")};
}

// 5. Synthetic recovery against the least-squares oracle.
Outcome synthetic_recovery() {
  const auto start = std::chrono::steady_clock::now();
  SynthConfig cfg;
  cfg.n_subjects = 4;
  cfg.n_sentences = 50;
  cfg.words_per_sentence = 6;
  cfg.n_channels = 8;
  cfg.n_timepoints = 50;
  cfg.snr = 2.0;
  cfg.artifact_rate = 0.0;
  cfg.seed = 5;
  const auto corpus = testing::make_corpus(cfg);
  const std::size_t n = corpus->dataset().n_trials();

  SuiteConfig sc;
  sc.roster = {{"Intercept", parse_feature_spec("Intercept")},
               {"F", parse_feature_spec("F")},
               {"F+S", parse_feature_spec("F+S")},
               {"F+SD", parse_feature_spec("F+SD")},
               {"F+S+SD", parse_feature_spec("F+S+SD")}};
  sc.folds = 5;
  sc.train.epochs = 20;
  sc.train.batch_size = 32;
  sc.train.lr = 0.02;
  sc.train.seed = 5;
  sc.n_boot = 1000;
  SuiteInputs in{&corpus->truth.decoder, &corpus->dataset(), &corpus->meta(), corpus->resources(),
                 corpus->ceiling_sse()};
  const SuiteResult result = run_model_suite(sc, in);

  // oracle on the same folds, r2_mod from fold-mean MSEs
  const std::vector<std::string> labels{"F", "F+S", "F+SD", "F+S+SD"};
  std::vector<FeatureSpec> subsets;
  for (const auto& l : labels) subsets.push_back(parse_feature_spec(l));
  std::vector<double> oracle_mse(labels.size(), 0.0);
  double floor = 0.0, icpt = 0.0;
  for (std::size_t k = 0; k < sc.folds; ++k) {
    const OracleBounds b = oracle_bounds(corpus->truth, corpus->dataset(), corpus->meta(), subsets,
                                         result.folds.train_items(k), result.folds.test_items(k));
    floor += b.mse_floor / static_cast<double>(sc.folds);
    icpt += b.intercept_mse / static_cast<double>(sc.folds);
    for (std::size_t i = 0; i < labels.size(); ++i) oracle_mse[i] += b.subsets[i].erp_mse / static_cast<double>(sc.folds);
  }
  std::map<std::string, double> fitted, oracle;
  bool never_above_oracle = true;
  std::string detail = std::to_string(n) + " trials; R2_mod fitted/oracle:";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    fitted[labels[i]] = result.find(labels[i])->report.r2_mod;
    oracle[labels[i]] = r2_mod(oracle_mse[i], icpt, floor);
    never_above_oracle = never_above_oracle && fitted[labels[i]] <= oracle[labels[i]] + 0.02;
    detail += " " + labels[i] + " " + fmt(fitted[labels[i]], 3) + "/" + fmt(oracle[labels[i]], 3);
  }
  const double full = fitted["F+S+SD"];
  double margin = 1.0;
  for (const char* sub : {"F", "F+S", "F+SD"}) margin = std::min(margin, full - fitted[sub]);
  const double gap = oracle["F+S+SD"] - full;
  const double elapsed = seconds_since(start);
  const bool pass = n == 1000 && gap <= 0.05 && margin >= 0.03 && never_above_oracle && elapsed < 300.0;
  detail += "; oracle gap " + fmt(gap, 3) + " (need <= 0.05); margin over best subset " + fmt(margin, 3) +
            " (need >= 0.03); " + fmt(elapsed, 3) + " s (need < 300)";
  return {pass, detail};
}

// 6. Weight-decay grid protocol, seed determinism, shared fold assignment across the roster.
Outcome protocol() {
  const auto corpus = testing::make_corpus(testing::small_synth_config(60));
  const std::size_t n = corpus->dataset().n_trials();
  TrainConfig train;
  train.epochs = 3;
  train.batch_size = 16;
  train.lr = 0.01;
  train.seed = 6;

  SuiteConfig defaults;
  const std::vector<double> want_grid{1e-5, 1e-3, 1e-1};
  const FoldAssignment folds = kfold_split(n, defaults.folds, train.seed);
  const FeatureMatrix f = corpus->features("F+S+SD");
  const EncodingModelSpec spec{parse_feature_spec("F+S+SD"), {}};
  auto run = [&] {
    return weight_decay_search(corpus->truth.decoder, spec, corpus->dataset(), corpus->meta(), f,
                               defaults.weight_decay_grid, folds, train);
  };
  const WeightDecaySearch a = run(), b = run();
  bool grid_ok = defaults.weight_decay_grid == want_grid && defaults.folds == 5 && a.table.size() == 15;
  for (std::size_t i = 0; grid_ok && i < a.table.size(); ++i) {
    grid_ok = a.table[i].weight_decay == want_grid[i / 5] && a.table[i].fold == i % 5;
  }
  bool same = a.chosen == b.chosen && a.table.size() == b.table.size() && a.fold_models.size() == b.fold_models.size();
  for (std::size_t i = 0; same && i < a.table.size(); ++i) same = a.table[i].test_mse == b.table[i].test_mse;
  for (std::size_t i = 0; same && i < a.fold_models.size(); ++i) {
    same = a.fold_models[i].interface.weight == b.fold_models[i].interface.weight;
  }

  SuiteConfig sc;
  sc.train = train;
  sc.train.epochs = 2;
  sc.n_boot = 500;
  SuiteInputs in{&corpus->truth.decoder, &corpus->dataset(), &corpus->meta(), corpus->resources(),
                 corpus->ceiling_sse()};
  const SuiteResult result = run_model_suite(sc, in);
  const std::string recomputed = fold_assignment_hash(kfold_split(n, sc.folds, sc.train.seed));
  bool shared = result.models.size() == 9 && result.skipped.empty() && result.fold_hash == recomputed;
  for (const auto& m : result.models) shared = shared && m.search.fold_hash == recomputed;
  return {grid_ok && same && shared,
          "grid table " + std::to_string(a.table.size()) + " cells over {1e-5, 1e-3, 1e-1} x 5 folds " +
              (grid_ok ? "ok" : "WRONG") + "; rerun " + (same ? "identical" : "DIFFERS") + "; " +
              std::to_string(result.models.size()) + " roster entries, fold hash " + result.fold_hash.substr(0, 16) +
              "... " + (shared ? "shared and verified" : "MISMATCH")};
}

// 7. Timecourse peak for a model driven only in the 200-350 ms latent window.
Outcome timecourse_sanity() {
  SynthConfig cfg;
  cfg.n_subjects = 4;
  cfg.n_sentences = 40;
  cfg.words_per_sentence = 6;
  cfg.n_channels = 8;
  cfg.n_timepoints = 200;
  cfg.snr = 2.0;
  cfg.artifact_rate = 0.0;
  cfg.active_window_ms = std::pair{200.0, 350.0};
  cfg.seed = 7;
  const auto corpus = testing::make_corpus(cfg);
  const auto& ds = corpus->dataset();
  const FoldAssignment folds = kfold_split(ds.n_trials(), 5, 7);
  const auto train_rows = folds.train_items(0), test_rows = folds.test_items(0);
  TrainConfig train;
  train.epochs = 20;
  train.batch_size = 32;
  train.lr = 0.02;
  train.seed = 7;
  const FeatureMatrix f = corpus->features("F+S+SD"), fc = corpus->features("Intercept");
  const auto& dec = corpus->truth.decoder;
  const auto model = train_encoding_model(dec, {parse_feature_spec("F+S+SD"), {}}, ds, corpus->meta(), f, train, train_rows);
  const auto icpt = train_encoding_model(dec, {parse_feature_spec("Intercept"), {}}, ds, corpus->meta(), fc, train, train_rows);
  const Tensor preds = predict_rows(model.model, f, corpus->meta(), test_rows);
  const Tensor icpt_preds = predict_rows(icpt.model, fc, corpus->meta(), test_rows);
  const ErpDataset actual = select_trials(ds, test_rows);
  const TimecourseSeries s = timepoint_correlation_increase(preds, icpt_preds, actual.data, &ds);
  const std::vector<double> smooth = moving_average_smooth(s.values, 9);
  const std::size_t peak = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  const double peak_ms = s.time_ms[peak];
  const bool pass = peak_ms >= 200.0 - 40.0 && peak_ms <= 350.0 + 40.0;
  return {pass, "smoothed (window 9) peak at " + fmt(peak_ms) + " ms, increase " + fmt(smooth[peak], 3) +
                    " (need within [160, 390] ms)"};
}

// 8. Bootstrap CI degenerate case and coverage of the fold mean.
Outcome bootstrap() {
  const std::vector<double> equal(5, 0.42);
  const ConfidenceInterval point = bootstrap_ci(equal, 10000, 0.05, 1);
  const bool collapsed = point.low == 0.42 && point.high == 0.42;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.3, 0.1);
  int contained = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> folds(5);
    for (auto& v : folds) v = normal(rng);
    double mean = 0.0;
    for (double v : folds) mean += v / 5.0;
    const ConfidenceInterval ci = bootstrap_ci(folds, 2000, 0.05, rng());
    if (ci.low <= mean && mean <= ci.high) ++contained;
  }
  return {collapsed && contained >= 990, std::string("equal folds -> [") + fmt(point.low) + ", " + fmt(point.high) +
                                             "]; fold mean inside CI in " + std::to_string(contained) +
                                             "/1000 trials (need >= 990)"};
}

// 9. Full CLI pipeline run twice gives byte-identical outputs.
std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (rel == "stderr.txt") continue;
    out[rel] = testing::read_file(entry.path());
  }
  return out;
}

Outcome cli_determinism() {
  testing::ScratchDir a("acc9a"), b("acc9b");
  const nlohmann::json config = {
      {"synth",
       {{"n_subjects", 2}, {"n_sentences", 16}, {"words_per_sentence", 6}, {"n_channels", 8}, {"n_timepoints", 80},
        {"snr", 2.0}, {"drivers", "F+S+SD"}, {"seed", 9}}},
      {"train", {{"epochs", 3}, {"batch_size", 16}, {"lr", 0.01}, {"dev_fraction", 0.1}, {"seed", 9}}},
      {"suite", {{"folds", 3}, {"n_boot", 500}}}};
  const std::vector<std::string> steps{
      "synth --config config.json --out data",
      "pretrain --config config.json --data data/ --arch beta --out ae",
      "select-arch --config config.json --data data/ --folds 2 --out select",
      "fit --config config.json --decoder ae/ --model F+S+SD+Ctx --out fit",
      "fit --config config.json --decoder ae/ --features data/lm.feat.tsv --out fit_table",
      "suite --config config.json --decoder ae/ --out suite",
      "evaluate --suite suite --out eval",
      "timecourse --suite suite --out tc",
      "export-words --suite suite --time-window 200,500 --out words"};
  for (const auto* dir : {&a, &b}) {
    std::ofstream(dir->path() / "config.json") << config.dump(2);
    for (const auto& step : steps) {
      const std::string cmd =
          "cd '" + dir->path().string() + "' && '" + ERPKIT_CLI_PATH + "' --quiet " + step + " 2> stderr.txt";
      if (testing::run_command(cmd) != 0) {
        return {false, "step failed: erpkit " + step + ": " + testing::read_file(dir->path() / "stderr.txt")};
      }
    }
  }
  const auto ta = tree_contents(a.path()), tb = tree_contents(b.path());
  std::size_t differing = 0;
  std::string first;
  for (const auto& [rel, bytes] : ta) {
    auto it = tb.find(rel);
    if (it == tb.end() || it->second != bytes) {
      if (differing++ == 0) first = rel;
    }
  }
  const bool pass = ta.size() == tb.size() && differing == 0 && ta.size() > 20;
  return {pass, std::to_string(steps.size()) + " subcommands run twice; " + std::to_string(ta.size()) + " vs " +
                    std::to_string(tb.size()) + " files, " + std::to_string(differing) + " differ" +
                    (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace
}  // namespace erpkit

int main() {
  using namespace erpkit;
  log::set_level(log::Level::kQuiet);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel correctness", kernel_correctness},
      {"geometry", geometry},
      {"r2_mod anchors", r2mod_anchors},
      {"frozen decoder", frozen_decoder},
      {"synthetic recovery", synthetic_recovery},
      {"protocol reproduction", protocol},
      {"timecourse sanity", timecourse_sanity},
      {"bootstrap CI", bootstrap},
      {"end-to-end determinism", cli_determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s [%s] %s (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
