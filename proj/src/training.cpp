#include "ecgforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ecgforge::train {

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) throw MetricUndefinedError("no positive records");
  if (cm.tn + cm.fp == 0) throw MetricUndefinedError("no negative records");
  Metrics m;
  m.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  m.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
  m.precision = (cm.tp + cm.fp == 0)
                    ? std::numeric_limits<double>::quiet_NaN()
                    : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  m.youden_j = m.sensitivity + m.specificity - 1.0;
  return m;
}

ConfusionMatrix CrossValReport::pooled() const {
  ConfusionMatrix p;
  for (const auto& f : folds) {
    p.tp += f.cm.tp;
    p.fn += f.cm.fn;
    p.tn += f.cm.tn;
    p.fp += f.cm.fp;
  }
  return p;
}

namespace {

void csv_row(std::ostream& os, const std::string& tag, const ConfusionMatrix& cm) {
  os << tag << "," << cm.tp << "," << cm.fn << "," << cm.tn << "," << cm.fp;
  try {
    const Metrics m = compute_metrics(cm);
    os << "," << m.sensitivity << "," << m.specificity << "," << m.precision << ","
       << m.youden_j;
  } catch (const MetricUndefinedError&) {
    os << ",nan,nan,nan,nan";
  }
  os << "\n";
}

}  // namespace

std::string report_csv(const CrossValReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "fold,TP,FN,TN,FP,sens,spec,prec,J\n";
  for (const auto& f : report.folds) csv_row(os, std::to_string(f.fold), f.cm);
  csv_row(os, "pooled", report.pooled());
  return os.str();
}

std::string report_summary(const CrossValReport& report) {
  std::ostringstream os;
  os << "preset: " << report.preset << "  seed: " << report.seed << "\n";
  const auto p = report.pooled();
  os << "pooled confusion: TP=" << p.tp << " FN=" << p.fn << " TN=" << p.tn << " FP=" << p.fp
     << "\n";
  try {
    const auto m = compute_metrics(p);
    os << "pooled: sens=" << m.sensitivity << " spec=" << m.specificity
       << " prec=" << m.precision << " J=" << m.youden_j << "\n";
  } catch (const MetricUndefinedError&) {
    os << "pooled metrics undefined\n";
  }
  // per-fold mean as the secondary view
  double jsum = 0.0;
  std::size_t n = 0;
  for (const auto& f : report.folds) {
    try {
      jsum += compute_metrics(f.cm).youden_j;
      ++n;
    } catch (const MetricUndefinedError&) {
    }
  }
  if (n > 0) os << "per-fold mean J: " << jsum / static_cast<double>(n) << "\n";
  return os.str();
}

CrossValReport parse_report_csv(const std::string& csv) {
  CrossValReport r;
  std::istringstream is(csv);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (cols.size() < 5 || cols[0] == "pooled") continue;
    FoldReport f;
    f.fold = static_cast<int>(std::stol(cols[0]));
    f.cm.tp = std::stoul(cols[1]);
    f.cm.fn = std::stoul(cols[2]);
    f.cm.tn = std::stoul(cols[3]);
    f.cm.fp = std::stoul(cols[4]);
    r.folds.push_back(f);
  }
  return r;
}

std::size_t num_classes(dataset::LabelScheme scheme) {
  return scheme == dataset::LabelScheme::three_class ? 3 : 2;
}

std::size_t label_of(const dataset::RecordEntry& entry, dataset::LabelScheme scheme) {
  using dataset::DiagnosisGroup;
  if (!entry.label.mi) return 0;
  if (scheme == dataset::LabelScheme::binary_mi_vs_hc) return 1;
  return entry.label.group == DiagnosisGroup::aMI ? 1 : 2;
}

double mi_probability(const std::vector<double>& probs, std::size_t offset,
                      std::size_t k) {
  double mi = 0.0;
  for (std::size_t j = 1; j < k; ++j) mi += probs[offset + j];
  return mi;
}

bool entry_in_eval_subset(const dataset::RecordEntry& e, dataset::EvalSubset subset) {
  using dataset::DiagnosisGroup;
  if (!e.label.mi) return true;  // HC negatives always kept
  switch (subset) {
    case dataset::EvalSubset::mi: return true;
    case dataset::EvalSubset::ami: return e.label.group == DiagnosisGroup::aMI;
    case dataset::EvalSubset::imi: return e.label.group == DiagnosisGroup::iMI;
  }
  return true;
}

bool entry_in_train_subset(const dataset::RecordEntry& e, dataset::TrainSubset subset) {
  using dataset::DiagnosisGroup;
  if (!e.label.mi) return true;
  switch (subset) {
    case dataset::TrainSubset::mi:
    case dataset::TrainSubset::ami_imi: return true;
    case dataset::TrainSubset::ami_only: return e.label.group == DiagnosisGroup::aMI;
    case dataset::TrainSubset::imi_only: return e.label.group == DiagnosisGroup::iMI;
  }
  return true;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// window -> flattened model input (downsample, optional fft front-end)
std::vector<double> prepare_window(const windowing::Window& raw,
                                   const models::ModelSpec& spec) {
  windowing::Window w;
  if (spec.domain == models::InputDomain::frequency) {
    windowing::FftConfig fc;
    fc.d = spec.input_length == 129 ? 192 : 2 * (spec.input_length - 1);
    w = windowing::fft_features(windowing::downsample(raw, fc.d), fc);
  } else {
    w = windowing::downsample(raw, spec.input_length);
  }
  if (w.length != spec.input_length || w.channels != spec.channels)
    throw ShapeError("prepared window does not match model input shape");
  return w.data;
}

struct TrainItem {
  const dataset::RecordEntry* entry;
  std::size_t label;
};

}  // namespace

models::Ensemble train_on(const std::vector<dataset::RecordEntry>& train_entries,
                          const dataset::SamplingPlan& plan, const RecordMap& records,
                          const models::ModelSpec& spec, dataset::LabelScheme scheme,
                          const TrainConfig& cfg) {
  const std::size_t k = num_classes(scheme);
  if (spec.num_classes != k)
    throw ConfigError("model num_classes does not match the label scheme");
  std::vector<std::size_t> class_counts(k, 0);
  for (const auto& e : train_entries) ++class_counts[label_of(e, scheme)];
  for (std::size_t j = 0; j < k; ++j)
    if (class_counts[j] == 0)
      throw DataError("training split has no records of class " + std::to_string(j));

  const bool recurrent =
      spec.kind == models::ModelKind::lstm_final || spec.kind == models::ModelKind::lstm_joint;
  const bool joint = spec.kind == models::ModelKind::lstm_joint;

  models::Ensemble ensemble;
  for (std::size_t member = 0; member < cfg.ensemble_members; ++member) {
    auto model = models::build_model(spec, cfg.seed + member);
    ad::Rng rng(cfg.seed * 0x9e3779b97f4a7c15ull + member + 1);
    double lambda = 1.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      // epoch schedule: every record appears `multiplicity` times
      std::vector<TrainItem> schedule;
      for (const auto& e : train_entries) {
        auto it = plan.epoch_multiplicity.find(e.record_id);
        const std::size_t mult = it == plan.epoch_multiplicity.end() ? 1 : it->second;
        for (std::size_t r = 0; r < mult; ++r)
          for (std::size_t wi = 0; wi < cfg.train_windows_per_record_per_epoch; ++wi)
            schedule.push_back({&e, label_of(e, scheme)});
      }
      std::shuffle(schedule.begin(), schedule.end(), rng);

      double epoch_loss = 0.0, epoch_class = 0.0, epoch_pred = 0.0;
      std::size_t batches = 0;
      for (std::size_t pos = 0; pos < schedule.size(); pos += cfg.batch_size) {
        const std::size_t bsz = std::min(cfg.batch_size, schedule.size() - pos);
        if (bsz < 2) break;  // batch statistics need at least two windows
        std::vector<double> batch;
        batch.reserve(bsz * spec.input_length * spec.channels);
        std::vector<std::size_t> labels;
        for (std::size_t i = 0; i < bsz; ++i) {
          const auto& item = schedule[pos + i];
          const auto& rec = records.at(item.entry->record_id);
          auto raw = windowing::sample_window(rec, cfg.window, rng);
          auto data = prepare_window(raw, spec);
          batch.insert(batch.end(), data.begin(), data.end());
          labels.push_back(item.label);
        }
        auto out = model->forward(batch, bsz, true, rng);
        auto class_loss = ad::crossentropy_loss(out.logits, labels);
        ad::VarPtr loss = class_loss;
        double pred_val = 0.0;
        if (joint) {
          auto pred_loss = ad::mse_loss(out.pred_seq, out.pred_target);
          pred_val = pred_loss->val[0];
          loss = ad::add(class_loss, ad::scale(pred_loss, lambda));
        }
        ad::zero_grads(model->params);
        ad::backward(loss);
        if (recurrent) ad::clip_gradients(model->params, cfg.clip_norm);
        ad::adam_step(model->params, cfg.adam);
        epoch_loss += loss->val[0];
        epoch_class += class_loss->val[0];
        epoch_pred += pred_val;
        ++batches;
      }
      if (batches > 0) {
        model->epoch_loss_log.push_back(epoch_loss / static_cast<double>(batches));
        if (joint && epoch_pred > 0.0) lambda = epoch_class / epoch_pred;
      }
    }
    ensemble.members.push_back(std::move(model));
  }
  return ensemble;
}

models::Ensemble train_fold(const dataset::DatasetSelection& selection,
                            const dataset::SamplingPlan& plan, int fold,
                            const RecordMap& records, const models::ModelSpec& spec,
                            const TrainConfig& cfg, dataset::TrainSubset subset) {
  std::vector<dataset::RecordEntry> train_entries;
  for (const auto& e : selection.entries) {
    auto it = selection.fold_of.find(e.record_id);
    if (it == selection.fold_of.end())
      throw DataError("record " + e.record_id + " has no fold assignment");
    if (it->second == fold) continue;
    if (!entry_in_train_subset(e, subset)) continue;
    train_entries.push_back(e);
  }
  return train_on(train_entries, plan, records, spec, selection.scheme, cfg);
}

RecordPrediction predict_record(const models::Ensemble& ensemble,
                                const wfdb::SignalRecord& record,
                                const models::ModelSpec& spec, const TrainConfig& cfg) {
  const std::size_t w = cfg.eval_windows_per_record;
  ad::Rng rng(cfg.seed ^ fnv1a(record.header.record_name));
  std::vector<double> batch;
  batch.reserve(w * spec.input_length * spec.channels);
  for (std::size_t i = 0; i < w; ++i) {
    auto raw = windowing::sample_window(record, cfg.window, rng);
    auto data = prepare_window(raw, spec);
    batch.insert(batch.end(), data.begin(), data.end());
  }
  auto probs = models::ensemble_predict(ensemble, batch, w);
  const std::size_t k = spec.num_classes;
  RecordPrediction out;
  out.probs.assign(k, 0.0);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < k; ++j) out.probs[j] += probs[i * k + j];
  for (auto& p : out.probs) p /= static_cast<double>(w);
  out.predicted_class = static_cast<std::size_t>(
      std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin());
  out.predicted_mi = mi_probability(out.probs, 0, k) >= 0.5;
  return out;
}

CrossValReport run_crossval(const dataset::ExperimentPreset& preset,
                            const dataset::DatasetSelection& selection,
                            const RecordMap& records, const models::ModelSpec& spec,
                            const TrainConfig& cfg, std::size_t k_folds,
                            const CrossValHooks& hooks) {
  CrossValReport report;
  report.preset = preset.name;
  report.seed = cfg.seed;
  const auto plan = make_sampling_plan(selection);
  for (std::size_t fold = 0; fold < k_folds; ++fold) {
    auto ensemble = train_fold(selection, plan, static_cast<int>(fold), records, spec, cfg,
                               preset.train_subset);
    FoldReport fr;
    fr.fold = static_cast<int>(fold);
    for (const auto& e : selection.entries) {
      if (selection.fold_of.at(e.record_id) != static_cast<int>(fold)) continue;
      if (!entry_in_eval_subset(e, preset.eval_subset)) continue;
      const auto pred = predict_record(ensemble, records.at(e.record_id), spec, cfg);
      const bool actual_mi = e.label.mi;
      if (actual_mi && pred.predicted_mi) ++fr.cm.tp;
      else if (actual_mi && !pred.predicted_mi) ++fr.cm.fn;
      else if (!actual_mi && !pred.predicted_mi) ++fr.cm.tn;
      else ++fr.cm.fp;
    }
    report.folds.push_back(fr);
    if (hooks.on_fold_done) hooks.on_fold_done(static_cast<int>(fold), ensemble);
  }
  return report;
}

}  // namespace ecgforge::train
