// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "erpkit/encoding_model.hpp"
#include "erpkit/error.hpp"
#include "erpkit/evaluate.hpp"
#include "erpkit/gradcheck.hpp"
#include "fixtures.hpp"
#include "gradient_cases.hpp"

namespace erpkit {
namespace {

using testing::Corpus;
using testing::iota_rows;

TrainConfig fast_config(int epochs = 25) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 16;
  t.lr = 0.02;
  t.seed = 4;
  return t;
}

EncodingModelSpec model_spec(const std::string& features) { return {parse_feature_spec(features), {}}; }

double mse_against(const Tensor& preds, const Tensor& actual) {
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - actual[i]) * (preds[i] - actual[i]);
  return s / static_cast<double>(preds.size());
}

class EncodingModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthConfig c = testing::small_synth_config(31);
    c.drivers = parse_feature_spec("F+S");
    c.noise_sd = 0.1;
    corpus_ = testing::make_corpus(c).release();
  }
  static void TearDownTestSuite() { delete corpus_; }
  static const Corpus& corpus() { return *corpus_; }
  static const AutoencoderParams& decoder() { return corpus_->truth.decoder; }

  static Corpus* corpus_;
};

Corpus* EncodingModelTest::corpus_ = nullptr;

TEST_F(EncodingModelTest, ZeroEverythingPredictsZero) {
  AutoencoderParams dec = decoder();
  for (auto& layer : dec.decoder) layer.bias.fill(0.0);
  const FeatureMatrix f = corpus().features("F+S");
  const EncodingModel m = init_encoding_model(dec, model_spec("F+S"), f, 1);
  const std::vector<double> zeros(f.n_cols(), 0.0);
  const Tensor out = predict_erp(m, zeros);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST_F(EncodingModelTest, PredictionIsDecodeOfInterface) {
  const FeatureMatrix f = corpus().features("F+S+Static");
  EncodingModel m = init_encoding_model(decoder(), model_spec("F+S+Static"), f, 2);
  std::mt19937_64 rng(3);
  m.interface.weight = testing::random_tensor(m.interface.weight.shape(), rng, 0.1);
  m.interface.bias = testing::random_tensor(m.interface.bias.shape(), rng, 0.1);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto row = f.row(i);
    const Tensor manual = decode(m.decoder, apply_interface(m.interface, interface_input(m, row)));
    EXPECT_EQ(predict_erp(m, row), manual);
  }
}

TEST_F(EncodingModelTest, ComposedGradientMatchesFiniteDifferences) {
  const FeatureMatrix f = corpus().features("F+Static");
  EncodingModel m = init_encoding_model(decoder(), model_spec("F+Static"), f, 5);
  ASSERT_TRUE(m.tuner_enabled);
  std::mt19937_64 rng(6);
  m.interface.weight = testing::random_tensor(m.interface.weight.shape(), rng, 0.2);
  m.interface.bias = testing::random_tensor(m.interface.bias.shape(), rng, 0.2);
  const auto row = f.row(7);
  const Tensor target = corpus().dataset().data.slice(7);

  EncodingModelGrad g = EncodingModelGrad::zeros_like(m);
  accumulate_row_gradient(m, row, target, std::nullopt, 1.0, g);
  std::vector<double> analytic, point;
  for (const Tensor* t : {&g.interface_weight, &g.interface_bias, &g.tuner_weight, &g.tuner_bias}) {
    analytic.insert(analytic.end(), t->values().begin(), t->values().end());
  }
  for (Tensor* t : m.trainable_tensors()) point.insert(point.end(), t->values().begin(), t->values().end());
  ASSERT_EQ(point.size(), analytic.size());

  auto f_loss = [&](std::span<const double> v) {
    EncodingModel probe = m;
    std::size_t off = 0;
    for (Tensor* t : probe.trainable_tensors()) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + t->size()),
                t->data());
      off += t->size();
    }
    return mse_loss(predict_erp(probe, row), target).value;
  };
  EXPECT_LT(finite_difference_check(f_loss, point, analytic).max_rel_error, 1e-4);
}

TEST_F(EncodingModelTest, DecoderUntouchedByTraining) {
  const std::string before = decoder_hash(decoder());
  const FeatureMatrix f = corpus().features("F+S+Static");
  const TrainedEncodingModel t =
      train_encoding_model(decoder(), model_spec("F+S+Static"), corpus().dataset(), corpus().meta(), f, fast_config(3));
  EXPECT_EQ(decoder_hash(decoder()), before);
  EXPECT_EQ(decoder_hash(t.model.decoder), before);
  EXPECT_EQ(t.model.decoder_hash, before);
}

TEST_F(EncodingModelTest, RecoversKnownInterface) {
  const auto& ds = corpus().dataset();
  const auto folds = kfold_split(ds.n_trials(), 4, 9);
  const auto train = folds.train_items(0), test = folds.test_items(0);
  const FeatureMatrix f = corpus().features("F+S"), fc = corpus().features("Intercept");
  const auto full = train_encoding_model(decoder(), model_spec("F+S"), ds, corpus().meta(), f, fast_config(), train);
  const auto icpt = train_encoding_model(decoder(), model_spec("Intercept"), ds, corpus().meta(), fc, fast_config(), train);
  const double mse_model = model_mse(full.model, ds, corpus().meta(), f, test);
  const double mse_icpt = model_mse(icpt.model, ds, corpus().meta(), fc, test);
  const double mse_ceiling = mse_against(corpus().truth.select_trials(test).clean, select_trials(ds, test).data);
  EXPECT_GE(r2_mod(mse_model, mse_icpt, mse_ceiling), 0.9);
}

TEST_F(EncodingModelTest, InterceptModelMatchesSubjectMeanResidual) {
  const auto& ds = corpus().dataset();
  const auto& meta = corpus().meta();
  const FeatureMatrix fc = corpus().features("Intercept");
  TrainConfig cfg = fast_config(40);
  cfg.dev_fraction = 0.0;
  const auto t = train_encoding_model(decoder(), model_spec("Intercept"), ds, meta, fc, cfg);
  const std::size_t per = ds.data.size() / ds.n_trials();
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, double> counts;
  for (std::size_t i = 0; i < ds.n_trials(); ++i) {
    auto& s = sums[meta[i].subject_id];
    s.resize(per, 0.0);
    for (std::size_t j = 0; j < per; ++j) s[j] += ds.data[i * per + j];
    counts[meta[i].subject_id] += 1.0;
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < ds.n_trials(); ++i) {
    const auto& s = sums[meta[i].subject_id];
    for (std::size_t j = 0; j < per; ++j) {
      const double d = ds.data[i * per + j] - s[j] / counts[meta[i].subject_id];
      residual += d * d;
    }
  }
  residual /= static_cast<double>(ds.data.size());
  const double mse = model_mse(t.model, ds, meta, fc, iota_rows(ds.n_trials()));
  EXPECT_NEAR(mse / residual, 1.0, 0.02);

  // same ERP for every trial of a subject
  const Tensor preds = predict_rows(t.model, fc, meta, iota_rows(ds.n_trials()));
  for (std::size_t i = 1; i < ds.n_trials(); ++i) {
    if (meta[i].subject_id == meta[0].subject_id) {
      ASSERT_EQ(preds.slice(i), preds.slice(0));
    }
  }
}

TEST_F(EncodingModelTest, SameSeedSameModelAndBestEpochReplays) {
  const FeatureMatrix f = corpus().features("F+S");
  const auto& ds = corpus().dataset();
  const auto a = train_encoding_model(decoder(), model_spec("F+S"), ds, corpus().meta(), f, fast_config(12));
  const auto b = train_encoding_model(decoder(), model_spec("F+S"), ds, corpus().meta(), f, fast_config(12));
  EXPECT_EQ(a.model.interface.weight, b.model.interface.weight);
  EXPECT_EQ(a.model.interface.bias, b.model.interface.bias);
  ASSERT_GE(a.history.best_epoch, 1);
  const auto replay =
      train_encoding_model(decoder(), model_spec("F+S"), ds, corpus().meta(), f, fast_config(a.history.best_epoch));
  EXPECT_EQ(replay.model.interface.weight, a.model.interface.weight);
}

TEST_F(EncodingModelTest, CheckpointRoundTripAndHashGuard) {
  testing::ScratchDir dir("em");
  const FeatureMatrix f = corpus().features("F+S+Static");
  const auto t = train_encoding_model(decoder(), model_spec("F+S+Static"), corpus().dataset(), corpus().meta(), f,
                                      fast_config(2));
  save_checkpoint(dir / "m", to_checkpoint(t.model));
  const EncodingModel back = encoding_model_from_checkpoint(load_checkpoint(dir / "m"), decoder());
  const auto rows = iota_rows(10);
  EXPECT_EQ(predict_rows(back, f, corpus().meta(), rows), predict_rows(t.model, f, corpus().meta(), rows));
  AutoencoderParams other = decoder();
  other.decoder[0].bias[0] += 1.0;
  EXPECT_THROW(encoding_model_from_checkpoint(load_checkpoint(dir / "m"), other), FormatError);
}

TEST_F(EncodingModelTest, WeightDecaySearchTable) {
  const FeatureMatrix f = corpus().features("F");
  const auto folds = kfold_split(corpus().dataset().n_trials(), 3, 1);
  const auto one = weight_decay_search(decoder(), model_spec("F"), corpus().dataset(), corpus().meta(), f, {1e-3},
                                       folds, fast_config(2));
  EXPECT_EQ(one.chosen, 1e-3);
  EXPECT_EQ(one.table.size(), 3u);
  EXPECT_EQ(one.fold_models.size(), 3u);
  EXPECT_EQ(one.fold_hash, fold_assignment_hash(folds));
}

TEST(WeightDecaySearch, NoiselessDataPrefersLeastShrinkage) {
  SynthConfig c = testing::small_synth_config(32);
  c.drivers = parse_feature_spec("F+S");
  c.noise_sd = 0.0;
  const auto corpus = testing::make_corpus(c);
  const FeatureMatrix f = corpus->features("F+S");
  const auto folds = kfold_split(corpus->dataset().n_trials(), 3, 2);
  const std::vector<double> grid{1e-5, 1e-3, 1e-1};
  const auto s = weight_decay_search(corpus->truth.decoder, model_spec("F+S"), corpus->dataset(), corpus->meta(), f,
                                     grid, folds, fast_config(15));
  EXPECT_EQ(s.table.size(), 9u);
  EXPECT_EQ(s.chosen, 1e-5);
  EXPECT_LT(s.mean_mse[0], s.mean_mse[2]);
}

TEST(Suite, RosterOfOne) {
  const auto corpus = testing::make_corpus(testing::small_synth_config(33));
  SuiteConfig cfg;
  cfg.roster = {{"Intercept", parse_feature_spec("Intercept")}};
  cfg.weight_decay_grid = {1e-5};
  cfg.folds = 3;
  cfg.train = fast_config(2);
  cfg.n_boot = 200;
  SuiteInputs in{&corpus->truth.decoder, &corpus->dataset(), &corpus->meta(), corpus->resources(),
                 corpus->ceiling_sse()};
  const SuiteResult r = run_model_suite(cfg, in);
  ASSERT_EQ(r.models.size(), 1u);
  EXPECT_EQ(r.models[0].name, "Intercept");
}

TEST(Suite, CombinedDriversBeatEachAlone) {
  SynthConfig c = testing::small_synth_config(34);
  c.drivers = parse_feature_spec("F+S");
  c.noise_sd = 0.2;
  const auto corpus = testing::make_corpus(c);
  SuiteConfig cfg;
  cfg.roster = {{"F", parse_feature_spec("F")}, {"S", parse_feature_spec("S")}, {"F+S", parse_feature_spec("F+S")}};
  cfg.weight_decay_grid = {1e-5};
  cfg.folds = 3;
  cfg.train = fast_config(20);
  cfg.n_boot = 200;
  FeatureResources res = corpus->resources();
  SuiteInputs in{&corpus->truth.decoder, &corpus->dataset(), &corpus->meta(), res, corpus->ceiling_sse()};
  const SuiteResult r = run_model_suite(cfg, in);
  ASSERT_EQ(r.models.size(), 4u);  // intercept appended
  ASSERT_NE(r.find("Intercept"), nullptr);
  for (const auto& m : r.models) EXPECT_EQ(m.search.fold_hash, r.fold_hash);
  EXPECT_EQ(r.fold_hash, fold_assignment_hash(r.folds));
  const double both = r.find("F+S")->report.r2_mod;
  EXPECT_GT(both, r.find("F")->report.r2_mod);
  EXPECT_GT(both, r.find("S")->report.r2_mod);
}

TEST(Suite, MissingResourceSkipsEntry) {
  const auto corpus = testing::make_corpus(testing::small_synth_config(35));
  SuiteConfig cfg;
  cfg.roster = {{"F", parse_feature_spec("F")}, {"F+Static", parse_feature_spec("F+Static")}};
  cfg.weight_decay_grid = {1e-5};
  cfg.folds = 2;
  cfg.train = fast_config(1);
  cfg.n_boot = 100;
  FeatureResources res = corpus->resources();
  res.embeddings = nullptr;
  SuiteInputs in{&corpus->truth.decoder, &corpus->dataset(), &corpus->meta(), res, corpus->ceiling_sse()};
  const SuiteResult r = run_model_suite(cfg, in);
  EXPECT_EQ(r.skipped, (std::vector<std::string>{"F+Static"}));
  EXPECT_EQ(r.models.size(), 2u);
}

}  // namespace
}  // namespace erpkit
