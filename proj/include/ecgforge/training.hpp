#pragma once

#include <map>
#include <string>
#include <vector>

#include "ecgforge/dataset.hpp"
#include "ecgforge/models.hpp"
#include "ecgforge/windowing.hpp"

namespace ecgforge::train {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::size_t train_windows_per_record_per_epoch = 8;
  std::size_t eval_windows_per_record = 32;
  std::uint64_t seed = 0;
  ad::AdamConfig adam;
  double clip_norm = 5.0;  // applied to recurrent models only
  std::size_t ensemble_members = 5;
  windowing::WindowConfig window;
};

struct ConfusionMatrix {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

struct Metrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;  // NaN when TP+FP == 0
  double youden_j = 0.0;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

struct FoldReport {
  int fold = 0;
  ConfusionMatrix cm;
};

struct CrossValReport {
  std::string preset;
  std::uint64_t seed = 0;
  std::vector<FoldReport> folds;

  ConfusionMatrix pooled() const;
};

std::string report_csv(const CrossValReport& report);
std::string report_summary(const CrossValReport& report);
CrossValReport parse_report_csv(const std::string& csv);

/// record_id -> channel-selected signal, ready for windowing.
using RecordMap = std::map<std::string, wfdb::SignalRecord>;

std::size_t label_of(const dataset::RecordEntry& entry, dataset::LabelScheme scheme);
std::size_t num_classes(dataset::LabelScheme scheme);

/// MI probability mass of one probability row (1 - P(HC)).
double mi_probability(const std::vector<double>& probs, std::size_t offset,
                      std::size_t num_classes);

/// Train an ensemble on the records of a selection subset. Only training
/// entries are passed in; test records never reach this function.
models::Ensemble train_on(const std::vector<dataset::RecordEntry>& train_entries,
                          const dataset::SamplingPlan& plan, const RecordMap& records,
                          const models::ModelSpec& spec, dataset::LabelScheme scheme,
                          const TrainConfig& cfg);

/// Assemble the fold's training split (excluding the test fold and any
/// records outside the preset's training subset) and train on it.
models::Ensemble train_fold(const dataset::DatasetSelection& selection,
                            const dataset::SamplingPlan& plan, int fold,
                            const RecordMap& records, const models::ModelSpec& spec,
                            const TrainConfig& cfg,
                            dataset::TrainSubset subset = dataset::TrainSubset::mi);

struct RecordPrediction {
  std::vector<double> probs;  // [num_classes]
  std::size_t predicted_class = 0;
  bool predicted_mi = false;
};

RecordPrediction predict_record(const models::Ensemble& ensemble,
                                const wfdb::SignalRecord& record,
                                const models::ModelSpec& spec, const TrainConfig& cfg);

bool entry_in_eval_subset(const dataset::RecordEntry& e, dataset::EvalSubset subset);
bool entry_in_train_subset(const dataset::RecordEntry& e, dataset::TrainSubset subset);

struct CrossValHooks {
  // called after each fold finishes; may persist checkpoints
  std::function<void(int fold, const models::Ensemble&)> on_fold_done;
};

CrossValReport run_crossval(const dataset::ExperimentPreset& preset,
                            const dataset::DatasetSelection& selection,
                            const RecordMap& records, const models::ModelSpec& spec,
                            const TrainConfig& cfg, std::size_t k_folds = 10,
                            const CrossValHooks& hooks = {});

}  // namespace ecgforge::train
