// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "erpkit/error.hpp"
#include "erpkit/synth.hpp"
#include "fixtures.hpp"

namespace erpkit {
namespace {

using testing::iota_rows;

TEST(SynthConfig, StrictJson) {
  const SynthConfig c = synth_config_from_json(nlohmann::json{{"n_subjects", 3}, {"drivers", "F+S"}, {"snr", 2.0}});
  EXPECT_EQ(c.n_subjects, 3u);
  EXPECT_EQ(c.drivers.label(), "F+S");
  EXPECT_EQ(c.snr, 2.0);
  EXPECT_EQ(synth_config_from_json(to_json(c)).n_subjects, 3u);
  EXPECT_THROW(synth_config_from_json(nlohmann::json{{"n_subject", 3}}), ConfigError);
}

TEST(SynthConfig, RejectsBadGeometry) {
  SynthConfig c = testing::small_synth_config(1);
  c.n_timepoints = 55;
  EXPECT_THROW(c.validate(), ConfigError);
  c = testing::small_synth_config(1);
  c.noise_sd = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Synth, NoiselessDataIsDecodedLatents) {
  SynthConfig c = testing::small_synth_config(2);
  c.noise_sd = 0.0;
  const SynthOutput s = generate(c);
  EXPECT_EQ(s.dataset.data, s.truth.clean);
  for (std::size_t i = 0; i < s.meta.size(); i += 17) {
    EXPECT_EQ(s.dataset.data.slice(i), decode(s.truth.decoder, s.truth.latents.slice(i)));
  }
}

TEST(Synth, SameSeedBitIdentical) {
  const SynthOutput a = generate(testing::small_synth_config(3));
  const SynthOutput b = generate(testing::small_synth_config(3));
  EXPECT_EQ(a.dataset.data, b.dataset.data);
  EXPECT_EQ(a.truth.latents, b.truth.latents);
  EXPECT_EQ(a.lm_table.rows, b.lm_table.rows);
  EXPECT_EQ(a.embeddings.entries, b.embeddings.entries);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_NE(generate(testing::small_synth_config(4)).dataset.data, a.dataset.data);
}

TEST(Synth, ResidualVarianceMatchesNoise) {
  SynthConfig c = testing::small_synth_config(5);
  c.n_subjects = 4;
  c.n_sentences = 50;
  c.noise_sd = 0.7;
  const SynthOutput s = generate(c);
  ASSERT_GE(s.dataset.data.size(), 100000u);
  double ss = 0.0;
  for (std::size_t i = 0; i < s.dataset.data.size(); ++i) {
    const double d = s.dataset.data[i] - s.truth.clean[i];
    ss += d * d;
  }
  EXPECT_NEAR(ss / static_cast<double>(s.dataset.data.size()) / (0.7 * 0.7), 1.0, 0.05);
}

TEST(Synth, SnrSetsNoiseLevel) {
  SynthConfig c = testing::small_synth_config(6);
  c.snr = 2.0;
  const SynthOutput s = generate(c);
  const std::size_t n = s.meta.size(), per = s.truth.clean.size() / n;
  double var = 0.0;
  for (std::size_t j = 0; j < per; ++j) {
    double m = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += s.truth.clean[i * per + j];
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) q += (s.truth.clean[i * per + j] - m) * (s.truth.clean[i * per + j] - m);
    var += q / static_cast<double>(n);
  }
  var /= static_cast<double>(per);
  EXPECT_NEAR(var / s.truth.noise_variance(), 2.0, 1e-9);
}

TEST(Synth, CorpusShapeAndWordClasses) {
  const SynthConfig c = testing::small_synth_config(7);
  const SynthOutput s = generate(c);
  EXPECT_EQ(s.meta.size(), c.n_trials());
  EXPECT_EQ(s.dataset.data.shape(), (Shape{c.n_trials(), 8, 50}));
  double content = 0.0, function = 0.0, n_content = 0.0, n_function = 0.0;
  for (const auto& m : s.meta) {
    const double count = s.counts.at(m.token);
    if (m.word_class == WordClass::kContent) {
      content += count;
      n_content += 1.0;
    } else {
      function += count;
      n_function += 1.0;
    }
    EXPECT_TRUE(s.lm_table.rows.count({m.sentence_id, m.word_position}));
  }
  ASSERT_GT(n_function, 0.0);
  ASSERT_GT(n_content, 0.0);
  EXPECT_GT(function / n_function, content / n_content);
  // drivers are zero on sentence-initial words
  for (std::size_t i = 0; i < s.meta.size(); ++i) {
    if (s.meta[i].word_position == 1) {
      for (double v : s.truth.design_row(i)) EXPECT_EQ(v, 0.0);
    }
  }
}

class OracleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthConfig c = testing::small_synth_config(8);
    c.noise_sd = 0.5;
    corpus_ = testing::make_corpus(c).release();
    const std::size_t n = corpus_->dataset().n_trials();
    for (std::size_t i = 0; i < n; ++i) (i % 4 == 0 ? test_ : train_).push_back(i);
  }
  static void TearDownTestSuite() { delete corpus_; }

  static OracleBounds bounds(const std::vector<std::string>& subsets) {
    std::vector<FeatureSpec> specs;
    for (const auto& s : subsets) specs.push_back(parse_feature_spec(s));
    return oracle_bounds(corpus_->truth, corpus_->dataset(), corpus_->meta(), specs, train_, test_);
  }

  static testing::Corpus* corpus_;
  static std::vector<std::size_t> train_, test_;
};

testing::Corpus* OracleTest::corpus_ = nullptr;
std::vector<std::size_t> OracleTest::train_;
std::vector<std::size_t> OracleTest::test_;

TEST_F(OracleTest, FullDriverSetReachesNoiseFloor) {
  const OracleBounds b = bounds({"F+S+SD"});
  EXPECT_NEAR(b.subsets[0].latent_mse, 0.0, 1e-12);
  EXPECT_NEAR(b.subsets[0].erp_mse, b.mse_floor, 1e-9);
  EXPECT_NEAR(b.mse_floor / 0.25, 1.0, 0.05);
  EXPECT_NEAR(b.subsets[0].r2_mod, 1.0, 1e-9);
}

TEST_F(OracleTest, EmptySubsetIsIntercept) {
  const OracleBounds b = bounds({"Intercept"});
  EXPECT_EQ(b.subsets[0].label, "Intercept");
  EXPECT_EQ(b.subsets[0].erp_mse, b.intercept_mse);
  EXPECT_EQ(b.subsets[0].r2_mod, 0.0);
}

TEST_F(OracleTest, NestedSubsetsAreMonotone) {
  const OracleBounds b = bounds({"Intercept", "F", "F+S", "F+S+SD"});
  for (std::size_t i = 1; i < b.subsets.size(); ++i) {
    EXPECT_LE(b.subsets[i].latent_mse, b.subsets[i - 1].latent_mse + 1e-12);
  }
  EXPECT_THROW(bounds({"Static"}), ConfigError);
}

TEST_F(OracleTest, LatentFitMatchesQrOracle) {
  const auto& truth = corpus_->truth;
  const OracleBounds b = bounds({"F+SD"});
  const std::size_t n_lat = truth.latents.size() / truth.latents.dim(0);
  // columns: F is block 0, SD is block 2 in driver order
  Eigen::MatrixXd x(static_cast<Eigen::Index>(train_.size()), 3);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(train_.size()), static_cast<Eigen::Index>(n_lat));
  for (std::size_t r = 0; r < train_.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const std::size_t i = train_[r];
    x(row, 0) = 1.0;
    x(row, 1) = truth.blocks[0].values[i];
    x(row, 2) = truth.blocks[2].values[i];
    for (std::size_t j = 0; j < n_lat; ++j) z(row, static_cast<Eigen::Index>(j)) = truth.latents[i * n_lat + j];
  }
  ASSERT_EQ(truth.blocks[2].source, FeatureSource::kSemanticDistance);
  const Eigen::MatrixXd beta = x.colPivHouseholderQr().solve(z);
  const double mse = (x * beta - z).squaredNorm() / static_cast<double>(z.size());
  EXPECT_NEAR(b.subsets[0].latent_mse, mse, 1e-10 * std::max(1.0, mse));
}

}  // namespace
}  // namespace erpkit
