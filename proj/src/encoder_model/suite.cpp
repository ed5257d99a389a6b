// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "erpkit/encoding_model.hpp"
#include "erpkit/error.hpp"
#include "erpkit/log.hpp"

namespace erpkit {

namespace {

// Empty when every source the feature spec needs is available, else the first missing resource.
std::string missing_resource(const FeatureSpec& spec, const FeatureResources& r) {
  for (FeatureSource s : spec.sources) {
    switch (s) {
      case FeatureSource::kFrequency:
        if (r.counts == nullptr) return "frequency counts";
        break;
      case FeatureSource::kSurprisal:
        if (r.lm_table == nullptr || !r.lm_table->has_column(r.surprisal_column)) return "surprisal column";
        break;
      case FeatureSource::kSemanticDistance:
        if (r.embeddings == nullptr || r.sentences == nullptr) return "static embeddings";
        break;
      case FeatureSource::kStaticEmbedding:
        if (r.embeddings == nullptr) return "static embeddings";
        break;
      case FeatureSource::kContextualEmbedding:
        if (r.lm_table == nullptr || !r.lm_table->has_column(r.contextual_column)) return "contextual embeddings";
        break;
      case FeatureSource::kTable:
        if (r.custom_table == nullptr) return "feature table";
        break;
      case FeatureSource::kConstant:
        break;
    }
  }
  return {};
}

FeatureSpec intercept_spec() { return FeatureSpec{{FeatureSource::kConstant}}; }

bool is_intercept(const FeatureSpec& spec) {
  return spec.sources.size() == 1 && spec.sources[0] == FeatureSource::kConstant;
}

}  // namespace

std::vector<SuiteEntry> default_roster() {
  using FS = FeatureSource;
  return {
      {"Intercept", intercept_spec()},
      {"F", FeatureSpec{{FS::kFrequency}}},
      {"F+S", FeatureSpec{{FS::kFrequency, FS::kSurprisal}}},
      {"F+SD", FeatureSpec{{FS::kFrequency, FS::kSemanticDistance}}},
      {"F+Static", FeatureSpec{{FS::kFrequency, FS::kStaticEmbedding}}},
      {"F+Ctx", FeatureSpec{{FS::kFrequency, FS::kContextualEmbedding}}},
      {"F+S+SD", FeatureSpec{{FS::kFrequency, FS::kSurprisal, FS::kSemanticDistance}}},
      {"F+S+SD+Static", FeatureSpec{{FS::kFrequency, FS::kSurprisal, FS::kSemanticDistance, FS::kStaticEmbedding}}},
      {"F+S+SD+Ctx",
       FeatureSpec{{FS::kFrequency, FS::kSurprisal, FS::kSemanticDistance, FS::kContextualEmbedding}}},
  };
}

const ModelResult* SuiteResult::find(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

SuiteResult run_model_suite(const SuiteConfig& config, const SuiteInputs& inputs) {
  if (inputs.decoder == nullptr || inputs.dataset == nullptr || inputs.meta == nullptr) {
    throw ConfigError("model suite needs a decoder, a dataset and trial metadata");
  }
  const ErpDataset& dataset = *inputs.dataset;
  const std::vector<TrialMeta>& meta = *inputs.meta;
  if (meta.size() != dataset.n_trials()) throw ShapeError("metadata rows do not match dataset trials");
  if (inputs.ceiling_sse.size() != dataset.n_trials()) {
    throw ShapeError("ceiling errors must have one entry per trial");
  }

  std::vector<SuiteEntry> roster = config.roster;
  const auto has_intercept = std::any_of(roster.begin(), roster.end(), [](const SuiteEntry& e) {
    return is_intercept(e.spec);
  });
  if (!has_intercept) roster.insert(roster.begin(), SuiteEntry{"Intercept", intercept_spec()});

  SuiteResult result;
  result.folds = kfold_split(dataset.n_trials(), config.folds, config.train.seed);
  result.fold_hash = fold_assignment_hash(result.folds);

  for (const auto& entry : roster) {
    const std::string missing = missing_resource(entry.spec, inputs.resources);
    if (!missing.empty()) {
      log::warn("skipping model " + entry.name + ": no " + missing + " supplied");
      result.skipped.push_back(entry.name);
      continue;
    }
    log::info("suite: model " + entry.name);
    const FeatureMatrix features = assemble(entry.spec, meta, inputs.resources);
    ModelResult model;
    model.name = entry.name;
    model.label = entry.spec.label();
    model.search = weight_decay_search(*inputs.decoder, EncodingModelSpec{entry.spec, config.tuner}, dataset, meta,
                                       features, config.weight_decay_grid, result.folds, config.train);
    result.models.push_back(std::move(model));
  }

  const auto intercept = std::find_if(result.models.begin(), result.models.end(),
                                      [](const ModelResult& m) { return m.label == "Intercept"; });
  const std::size_t per = dataset.n_channels() * dataset.n_timepoints();
  std::vector<double> fold_ceiling;
  for (std::size_t f = 0; f < result.folds.k; ++f) {
    double sse = 0.0;
    const std::vector<std::size_t> test = result.folds.test_items(f);
    for (std::size_t row : test) sse += inputs.ceiling_sse[row];
    fold_ceiling.push_back(sse / static_cast<double>(test.size() * per));
  }
  auto chosen_fold_mse = [&](const WeightDecaySearch& s) {
    const auto it = std::find(config.weight_decay_grid.begin(), config.weight_decay_grid.end(), s.chosen);
    return s.fold_test_mse[static_cast<std::size_t>(it - config.weight_decay_grid.begin())];
  };
  const std::vector<double> fold_intercept = chosen_fold_mse(intercept->search);
  for (auto& m : result.models) {
    m.report = make_report(m.name, chosen_fold_mse(m.search), fold_intercept, fold_ceiling, config.n_boot,
                           config.alpha, config.train.seed);
    m.report.weight_decay = m.search.chosen;
  }
  return result;
}

}  // namespace erpkit
