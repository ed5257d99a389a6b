// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "erpkit/error.hpp"
#include "erpkit/evaluate.hpp"
#include "fixtures.hpp"
#include "gradient_cases.hpp"

namespace erpkit {
namespace {

// Textbook Pearson r over two flat vectors.
double brute_force_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(R2Mod, Anchors) {
  EXPECT_EQ(r2_mod(50.0, 50.0, 30.0), 0.0);
  EXPECT_EQ(r2_mod(30.0, 50.0, 30.0), 1.0);
  EXPECT_NEAR(r2_mod(40.0, 50.0, 30.0), 0.5, 1e-12);
  EXPECT_THROW(r2_mod(1.0, 30.0, 30.0), ConfigError);
}

TEST(R2Mod, AnchorsExactForRandomValues) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = a + u(rng);
    EXPECT_EQ(r2_mod(b, b, a), 0.0);
    EXPECT_EQ(r2_mod(a, b, a), 1.0);
  }
}

TEST(Pearson, PerfectAndInverse) {
  const std::vector<double> x{1, 3, 2, 5}, neg{-1, -3, -2, -5};
  EXPECT_NEAR(pearson(x, x).r, 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, neg).r, -1.0, 1e-15);
  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_TRUE(pearson(x, flat).degenerate);
  EXPECT_EQ(pearson(x, flat).r, 0.0);
}

Tensor epochs(std::size_t n, std::size_t c, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testing::random_tensor({n, c, t}, rng);
}

TEST(Timecourse, ModelEqualsInterceptGivesZero) {
  const Tensor actual = epochs(20, 3, 10, 2), preds = epochs(20, 3, 10, 3);
  const auto s = timepoint_correlation_increase(preds, preds, actual);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Timecourse, PerfectPredictionBound) {
  const Tensor actual = epochs(20, 3, 10, 4), icpt = epochs(20, 3, 10, 5);
  const auto s = timepoint_correlation_increase(actual, icpt, actual);
  for (std::size_t t = 0; t < 10; ++t) EXPECT_NEAR(s.values[t], 1.0 - s.r_intercept[t], 1e-12);
}

TEST(Timecourse, PooledRMatchesBruteForce) {
  const Tensor actual = epochs(15, 4, 6, 6), preds = epochs(15, 4, 6, 7);
  const auto s = timepoint_correlation_increase(preds, preds, actual);
  for (std::size_t t = 0; t < 6; ++t) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < 15; ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        x.push_back(preds[(i * 4 + c) * 6 + t]);
        y.push_back(actual[(i * 4 + c) * 6 + t]);
      }
    }
    EXPECT_NEAR(s.r_model[t], brute_force_r(x, y), 1e-12);
  }
}

TEST(Timecourse, TimeAxisFromDataset) {
  ErpDataset timing;
  timing.data = Tensor({1, 1, 4});
  timing.sampling_rate_hz = 250.0;
  timing.epoch_start_ms = -100.0;
  timing.epoch_end_ms = -84.0;
  const Tensor a = epochs(5, 1, 4, 8);
  const auto s = timepoint_correlation_increase(a, a, a, &timing);
  EXPECT_EQ(s.time_ms, (std::vector<double>{-100, -96, -92, -88}));
}

TEST(Smooth, Cases) {
  const std::vector<double> x{0, 3, 0};
  EXPECT_EQ(moving_average_smooth(x, 1), x);
  EXPECT_EQ(moving_average_smooth(x, 3), (std::vector<double>{1.5, 1.0, 1.5}));
  const std::vector<double> flat(7, 2.5);
  EXPECT_EQ(moving_average_smooth(flat, 5), flat);
  EXPECT_THROW(moving_average_smooth(x, 2), ConfigError);
}

TEST(Bootstrap, EqualValuesCollapse) {
  for (double v : {0.37, 0.1, 0.42, -3.3, 1e-7}) {
    for (std::size_t n : {2u, 3u, 5u, 7u}) {
      const auto ci = bootstrap_ci(std::vector<double>(n, v), 1000, 0.05, 1);
      EXPECT_EQ(ci.low, v);
      EXPECT_EQ(ci.high, v);
    }
  }
}

TEST(Bootstrap, BracketsMeanAndIsDeterministic) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(5);
    for (auto& x : v) x = normal(rng);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 5.0;
    const auto a = bootstrap_ci(v, 2000, 0.05, 3), b = bootstrap_ci(v, 2000, 0.05, 3);
    EXPECT_LE(a.low, mean);
    EXPECT_GE(a.high, mean);
    EXPECT_EQ(a.low, b.low);
    EXPECT_EQ(a.high, b.high);
  }
}

TEST(Report, FromFoldMeans) {
  const EvalReport r = make_report("m", {40, 42}, {50, 52}, {30, 32}, 500, 0.05, 1);
  EXPECT_NEAR(r.r2_mod, 0.5, 1e-12);
  ASSERT_EQ(r.fold_r2_mod.size(), 2u);
  EXPECT_LE(r.ci_low, r.ci_high);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("model"), "m");
}

TEST(PerWord, CorrelationsAndCoding) {
  const Tensor actual = epochs(3, 2, 5, 10);
  Tensor preds = actual;
  for (std::size_t j = 10; j < 20; ++j) preds[j] = -actual[j];  // trial 1 negated
  std::vector<TrialMeta> meta(3);
  meta[0].word_class = WordClass::kContent;
  meta[1].word_class = WordClass::kFunction;
  meta[2].word_class = WordClass::kContent;
  ModelCoding coding;
  coding.frequency = 1;
  const auto table = per_word_correlations("F", coding, preds, actual, meta);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_NEAR(table.rows[0].r, 1.0, 1e-12);
  EXPECT_NEAR(table.rows[1].r, -1.0, 1e-12);

  const auto summary = content_function_summary(table);
  EXPECT_EQ(summary.at("F").at("content").n, 2u);
  EXPECT_NEAR(summary.at("F").at("function").mean_r, -1.0, 1e-12);

  testing::ScratchDir dir("eval");
  write_word_table_tsv(dir / "w.tsv", table);
  const std::string text = testing::read_file(dir / "w.tsv");
  // header, then rows with word_type +1/-1 and flags in {-1, +1}
  EXPECT_NE(text.find("\tword_type\t"), std::string::npos);
  EXPECT_NE(text.find("\tfunction\t\t-1\t"), std::string::npos) << text;
  EXPECT_NE(text.find("\t1\t-1\t-1\t-1\t-1\t0\n"), std::string::npos) << text;
}

TEST(PerWord, WindowRestrictsTimepoints) {
  const Tensor actual = epochs(1, 1, 6, 11);
  Tensor preds = actual;
  for (std::size_t t = 3; t < 6; ++t) preds[t] = 0.0;
  std::vector<TrialMeta> meta(1);
  const auto table = per_word_correlations("m", {}, preds, actual, meta, TimeWindow{0, 3});
  EXPECT_NEAR(table.rows[0].r, 1.0, 1e-12);
}

}  // namespace
}  // namespace erpkit
