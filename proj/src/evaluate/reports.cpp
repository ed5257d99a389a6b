// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <numeric>
#include <sstream>

#include "erpkit/detail/io_util.hpp"
#include "erpkit/error.hpp"
#include "erpkit/evaluate.hpp"

namespace erpkit {

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"model", model},
          {"mse_model", mse_model},
          {"mse_intercept", mse_intercept},
          {"mse_autoencoder", mse_autoencoder},
          {"r2_mod", r2_mod},
          {"ci_low", ci_low},
          {"ci_high", ci_high},
          {"weight_decay", weight_decay},
          {"per_fold",
           {{"r2_mod", fold_r2_mod},
            {"mse_model", fold_mse_model},
            {"mse_intercept", fold_mse_intercept},
            {"mse_autoencoder", fold_mse_autoencoder}}}};
}

EvalReport make_report(const std::string& model, std::vector<double> fold_mse_model,
                       std::vector<double> fold_mse_intercept, std::vector<double> fold_mse_autoencoder,
                       std::size_t n_boot, double alpha, std::uint64_t seed) {
  const std::size_t k = fold_mse_model.size();
  if (k == 0 || fold_mse_intercept.size() != k || fold_mse_autoencoder.size() != k) {
    throw ShapeError("make_report: per-fold vectors must be non-empty and equally long");
  }
  EvalReport report;
  report.model = model;
  for (std::size_t f = 0; f < k; ++f) {
    report.fold_r2_mod.push_back(r2_mod(fold_mse_model[f], fold_mse_intercept[f], fold_mse_autoencoder[f]));
  }
  report.mse_model = mean(fold_mse_model);
  report.mse_intercept = mean(fold_mse_intercept);
  report.mse_autoencoder = mean(fold_mse_autoencoder);
  report.r2_mod = r2_mod(report.mse_model, report.mse_intercept, report.mse_autoencoder);
  if (k >= 2) {
    const ConfidenceInterval ci = bootstrap_ci(report.fold_r2_mod, n_boot, alpha, seed);
    report.ci_low = ci.low;
    report.ci_high = ci.high;
  } else {
    report.ci_low = report.ci_high = report.fold_r2_mod[0];
  }
  report.fold_mse_model = std::move(fold_mse_model);
  report.fold_mse_intercept = std::move(fold_mse_intercept);
  report.fold_mse_autoencoder = std::move(fold_mse_autoencoder);
  return report;
}

void write_timecourse_tsv(const std::filesystem::path& path, const TimecourseSeries& series,
                          const std::vector<double>& smoothed) {
  std::ostringstream out;
  out << "# timepoint: sample index within the epoch\n"
      << "# time_ms: milliseconds relative to word onset\n"
      << "# r_model, r_intercept: Pearson r between predicted and actual amplitudes at this timepoint, pooled over "
         "trials and channels\n"
      << "# increase: r_model - r_intercept\n"
      << "# smoothed: centered moving average of increase, window " << series.smoothing_window
      << " samples, truncated at the edges\n"
      << "# degenerate: 1 if either correlation had zero variance (r set to 0)\n";
  out << "timepoint\ttime_ms\tr_model\tr_intercept\tincrease\tsmoothed\tdegenerate\n";
  for (std::size_t t = 0; t < series.values.size(); ++t) {
    out << t << '\t' << format_double(series.time_ms[t]) << '\t' << format_double(series.r_model[t]) << '\t'
        << format_double(series.r_intercept[t]) << '\t' << format_double(series.values[t]) << '\t'
        << format_double(smoothed.at(t)) << '\t' << int(series.degenerate[t]) << '\n';
  }
  detail::write_text_file(path, out.str());
}

void write_word_table_tsv(const std::filesystem::path& path, const WordLevelTable& table) {
  std::ostringstream out;
  out << "# one row per evaluated trial per model\n"
      << "# r: Pearson r between predicted and actual epoch (channels x timepoints flattened)\n"
      << "# word_type: +1 content, -1 function\n"
      << "# frequency..contextual_embedding: +1 if the model includes that information, -1 otherwise\n"
      << "# degenerate: 1 if the trial had zero variance (r set to 0)\n";
  out << "model\ttrial\tsubject_id\tsentence_id\tword_position\ttoken\tword_class\tpos_tag\tword_type\tr\t"
         "frequency\tsurprisal\tsemantic_distance\tstatic_embedding\tcontextual_embedding\tdegenerate\n";
  for (const auto& row : table.rows) {
    const auto& m = row.meta;
    out << row.model << '\t' << row.trial << '\t' << m.subject_id << '\t' << m.sentence_id << '\t'
        << m.word_position << '\t' << m.token << '\t' << to_string(m.word_class) << '\t' << m.pos_tag << '\t'
        << (m.word_class == WordClass::kContent ? 1 : -1) << '\t' << format_double(row.r) << '\t'
        << row.coding.frequency << '\t' << row.coding.surprisal << '\t' << row.coding.semantic_distance << '\t'
        << row.coding.static_embedding << '\t' << row.coding.contextual_embedding << '\t'
        << (row.degenerate ? 1 : 0) << '\n';
  }
  detail::write_text_file(path, out.str());
}

}  // namespace erpkit
