#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "ecgforge/attribution.hpp"
#include "ecgforge/checkpoint.hpp"
#include "ecgforge/dataset.hpp"
#include "ecgforge/synth.hpp"
#include "ecgforge/training.hpp"

namespace fs = std::filesystem;
using namespace ecgforge;

namespace {

wfdb::ChannelSelection parse_channels(const std::string& s) {
  wfdb::ChannelSelection sel;
  if (s == "all15") sel.set = wfdb::ChannelSet::all15;
  else if (s == "twelve") sel.set = wfdb::ChannelSet::twelve;
  else if (s == "eight") sel.set = wfdb::ChannelSet::eight_nonredundant;
  else if (s == "frank") sel.set = wfdb::ChannelSet::frank;
  else if (s == "limb") sel.set = wfdb::ChannelSet::limb;
  else {
    const auto lead = wfdb::parse_lead(s);
    if (lead == wfdb::LeadId::unknown) throw ConfigError("unknown channel set: " + s);
    sel.set = wfdb::ChannelSet::single;
    sel.single = lead;
  }
  return sel;
}

std::string channels_name(const wfdb::ChannelSelection& sel) {
  switch (sel.set) {
    case wfdb::ChannelSet::all15: return "all15";
    case wfdb::ChannelSet::twelve: return "twelve";
    case wfdb::ChannelSet::eight_nonredundant: return "eight";
    case wfdb::ChannelSet::frank: return "frank";
    case wfdb::ChannelSet::limb: return "limb";
    case wfdb::ChannelSet::single: return wfdb::lead_name(sel.single);
  }
  return "?";
}

struct RunOptions {
  std::string data_root;
  std::string preset;
  std::string model = "fcn";
  std::string domain = "time";
  std::string channels;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/out";
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::size_t filters = 128;
  std::size_t hidden = 256;
  std::size_t members = 5;
  std::size_t folds = 10;
  std::size_t train_windows = 8;
  std::size_t eval_windows = 32;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--data-root", o.data_root, "record tree root")
      ->envname("ECGFORGE_DATA")
      ->required();
  cmd->add_option("--preset", o.preset, "benchmark preset name");
  cmd->add_option("--model", o.model)->check(CLI::IsMember({"fcn", "resnet", "lstm", "lstm-joint"}));
  cmd->add_option("--domain", o.domain)->check(CLI::IsMember({"time", "freq"}));
  cmd->add_option("--channels", o.channels, "all15|twelve|eight|frank|limb|<lead>");
  cmd->add_option("--seed", o.seed);
  cmd->add_option("--out-dir", o.out_dir);
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--batch-size", o.batch_size);
  cmd->add_option("--filters", o.filters);
  cmd->add_option("--hidden", o.hidden);
  cmd->add_option("--members", o.members);
  cmd->add_option("--folds", o.folds);
  cmd->add_option("--train-windows", o.train_windows);
  cmd->add_option("--eval-windows", o.eval_windows);
  cmd->set_config("--config")->configurable(false);
}

models::ModelKind kind_of(const std::string& s) {
  if (s == "lstm") return models::ModelKind::lstm_final;
  if (s == "lstm-joint") return models::ModelKind::lstm_joint;
  return models::parse_model_kind(s);
}

models::ModelSpec spec_from(const RunOptions& o, const dataset::ExperimentPreset& preset) {
  models::ModelSpec spec;
  spec.kind = kind_of(o.model);
  spec.domain = o.domain == "freq" ? models::InputDomain::frequency : models::InputDomain::time;
  spec.input_length = spec.domain == models::InputDomain::frequency ? 129 : 192;
  spec.channels = wfdb::leads_for(preset.channels).size();
  spec.num_classes = preset.scheme == dataset::LabelScheme::three_class ? 3 : 2;
  spec.filters = o.filters;
  spec.hidden = o.hidden;
  spec.validate();
  return spec;
}

train::TrainConfig train_config_from(const RunOptions& o) {
  train::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.seed = o.seed;
  cfg.ensemble_members = o.members;
  cfg.train_windows_per_record_per_epoch = o.train_windows;
  cfg.eval_windows_per_record = o.eval_windows;
  return cfg;
}

dataset::ExperimentPreset resolve_preset(const RunOptions& o) {
  dataset::ExperimentPreset preset;
  if (!o.preset.empty()) preset = dataset::benchmark_preset(o.preset);
  else preset.name = "custom";
  if (!o.channels.empty()) preset.channels = parse_channels(o.channels);
  return preset;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
}

// every resolved option that affects the outputs, for exact re-runs
std::string run_manifest(const RunOptions& o, const dataset::ExperimentPreset& preset,
                         const models::ModelSpec& spec) {
  std::ostringstream os;
  os << "preset = " << preset.name << "\n";
  os << "channels = " << channels_name(preset.channels) << "\n";
  os << "seed = " << o.seed << "\n";
  os << "folds = " << o.folds << "\n";
  os << "epochs = " << o.epochs << "\n";
  os << "batch_size = " << o.batch_size << "\n";
  os << "members = " << o.members << "\n";
  os << "train_windows = " << o.train_windows << "\n";
  os << "eval_windows = " << o.eval_windows << "\n";
  os << spec.manifest();
  return os.str();
}

train::RecordMap load_records(const std::string& root,
                              const std::vector<dataset::RecordEntry>& entries,
                              const wfdb::ChannelSelection& sel) {
  train::RecordMap out;
  for (const auto& e : entries) {
    auto path = dataset::find_record_path(root, e.record_id);
    if (!path) throw DataError("record not found under data root: " + e.record_id);
    out[e.record_id] = wfdb::select_channels(wfdb::load_record(*path), sel);
  }
  return out;
}

int cmd_synth(const synth::SynthConfig& cfg, const std::string& out) {
  synth::generate_corpus(cfg, out);
  std::cout << "wrote " << cfg.num_mi_patients + cfg.num_hc_patients << " patients to " << out
            << "\n";
  return 0;
}

int cmd_ingest(const RunOptions& o) {
  const auto preset = resolve_preset(o);
  auto entries = dataset::scan_data_root(o.data_root);
  auto selection = dataset::select_records(entries, preset.keep_all_mi_ecgs);
  selection.scheme = preset.scheme;
  dataset::assign_folds(selection, o.folds, o.seed);
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "manifest.csv", dataset::manifest_csv(selection));
  std::cout << "selected " << selection.entries.size() << " records ("
            << entries.size() << " scanned) -> " << o.out_dir << "/manifest.csv\n";
  return 0;
}

int cmd_crossval(const RunOptions& o) {
  const auto preset = resolve_preset(o);
  const auto spec = spec_from(o, preset);
  const auto cfg = train_config_from(o);

  auto entries = dataset::scan_data_root(o.data_root);
  auto selection = dataset::select_records(entries, preset.keep_all_mi_ecgs);
  selection.scheme = preset.scheme;
  dataset::assign_folds(selection, o.folds, o.seed);
  auto records = load_records(o.data_root, selection.entries, preset.channels);

  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "run.manifest", run_manifest(o, preset, spec));
  write_file(fs::path(o.out_dir) / "manifest.csv", dataset::manifest_csv(selection));

  train::CrossValHooks hooks;
  hooks.on_fold_done = [&](int fold, const models::Ensemble& ens) {
    checkpoint::save_ensemble(ens, (fs::path(o.out_dir) / "checkpoints").string(),
                              "fold" + std::to_string(fold));
    std::cout << "fold " << fold << " done\n";
  };
  auto report = train::run_crossval(preset, selection, records, spec, cfg, o.folds, hooks);
  write_file(fs::path(o.out_dir) / "report.csv", train::report_csv(report));
  write_file(fs::path(o.out_dir) / "summary.txt", train::report_summary(report));
  std::cout << train::report_summary(report);
  return 0;
}

int cmd_train(const RunOptions& o) {
  // single ensemble on the whole selection (no held-out fold)
  const auto preset = resolve_preset(o);
  const auto spec = spec_from(o, preset);
  const auto cfg = train_config_from(o);

  auto entries = dataset::scan_data_root(o.data_root);
  auto selection = dataset::select_records(entries, preset.keep_all_mi_ecgs);
  selection.scheme = preset.scheme;
  auto records = load_records(o.data_root, selection.entries, preset.channels);
  auto plan = dataset::make_sampling_plan(selection);

  std::vector<dataset::RecordEntry> train_entries;
  for (const auto& e : selection.entries)
    if (train::entry_in_train_subset(e, preset.train_subset)) train_entries.push_back(e);
  auto ens = train::train_on(train_entries, plan, records, spec, selection.scheme, cfg);

  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "run.manifest", run_manifest(o, preset, spec));
  checkpoint::save_ensemble(ens, (fs::path(o.out_dir) / "checkpoints").string(), "model");
  std::cout << "trained ensemble of " << ens.members.size() << " -> " << o.out_dir << "\n";
  return 0;
}

int cmd_evaluate(const RunOptions& o, const std::string& ckpt_dir, const std::string& stem) {
  const auto preset = resolve_preset(o);
  const auto spec = spec_from(o, preset);
  const auto cfg = train_config_from(o);
  auto ens = checkpoint::load_ensemble(spec, ckpt_dir, stem, o.members);

  auto entries = dataset::scan_data_root(o.data_root);
  auto selection = dataset::select_records(entries, preset.keep_all_mi_ecgs);
  auto records = load_records(o.data_root, selection.entries, preset.channels);

  train::ConfusionMatrix cm;
  for (const auto& e : selection.entries) {
    if (!train::entry_in_eval_subset(e, preset.eval_subset)) continue;
    auto pred = train::predict_record(ens, records.at(e.record_id), spec, cfg);
    const bool truth_mi = e.label.mi;
    if (truth_mi && pred.predicted_mi) ++cm.tp;
    else if (truth_mi) ++cm.fn;
    else if (pred.predicted_mi) ++cm.fp;
    else ++cm.tn;
  }
  const auto m = train::compute_metrics(cm);
  std::ostringstream os;
  os << "TP=" << cm.tp << " FN=" << cm.fn << " TN=" << cm.tn << " FP=" << cm.fp
     << " sens=" << m.sensitivity << " spec=" << m.specificity << " J=" << m.youden_j << "\n";
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "evaluation.txt", os.str());
  std::cout << os.str();
  return 0;
}

int cmd_attribute(const RunOptions& o, const std::string& ckpt_dir, const std::string& stem,
                  const std::string& record_id, const std::string& method_str,
                  std::size_t target) {
  const auto preset = resolve_preset(o);
  const auto spec = spec_from(o, preset);
  auto ens = checkpoint::load_ensemble(spec, ckpt_dir, stem, o.members);
  auto& model = *ens.members.front();

  auto path = dataset::find_record_path(o.data_root, record_id);
  if (!path) throw DataError("record not found: " + record_id);
  auto rec = wfdb::select_channels(wfdb::load_record(*path), preset.channels);

  windowing::WindowConfig wc;
  ad::Rng rng(o.seed);
  auto raw = windowing::sample_window(rec, wc, rng);
  auto win = windowing::downsample(raw, spec.input_length);

  const auto method = attribution::parse_method(method_str);
  attribution::AttributionMap map;
  switch (method) {
    case attribution::Method::grad_x_input:
      map = attribution::grad_x_input(model, win, target);
      break;
    case attribution::Method::integrated_gradients:
      map = attribution::integrated_gradients(model, win, target);
      break;
    case attribution::Method::epsilon_lrp:
      map = attribution::epsilon_lrp(model, win, target);
      break;
  }
  map = attribution::normalize_channels(std::move(map));

  std::vector<std::string> lead_names;
  for (const auto& s : rec.header.signals) lead_names.push_back(s.lead);
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / (record_id + "_scores.csv"),
             attribution::scores_csv(map, lead_names));
  std::vector<bool> used(map.channels, true);
  attribution::render_figure(win, map, lead_names, used,
                             (fs::path(o.out_dir) / (record_id + "_attribution.svg")).string());
  std::cout << "wrote attribution for " << record_id << " (" << attribution::method_name(method)
            << ") -> " << o.out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw DataError("cannot read " + csv_path);
  std::stringstream ss;
  ss << f.rdbuf();
  auto report = train::parse_report_csv(ss.str());
  std::cout << train::report_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECG myocardial-infarction classification pipeline"};
  app.require_subcommand(1);

  synth::SynthConfig scfg;
  std::string synth_out = "data/synth";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic record corpus");
  synth_cmd->add_option("--out", synth_out);
  synth_cmd->add_option("--mi", scfg.num_mi_patients);
  synth_cmd->add_option("--hc", scfg.num_hc_patients);
  synth_cmd->add_option("--records-per-patient", scfg.records_per_patient);
  synth_cmd->add_option("--duration", scfg.duration_s);
  synth_cmd->add_option("--fs", scfg.sampling_rate);
  synth_cmd->add_option("--seed", scfg.seed);

  RunOptions ingest_o, cv_o, train_o, eval_o, attr_o;
  auto* ingest_cmd = app.add_subcommand("ingest", "scan, select and fold a record tree");
  add_run_options(ingest_cmd, ingest_o);
  auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validated benchmark");
  add_run_options(cv_cmd, cv_o);
  auto* train_cmd = app.add_subcommand("train", "train one ensemble on all records");
  add_run_options(train_cmd, train_o);

  std::string eval_ckpt, eval_stem = "model";
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a saved ensemble");
  add_run_options(eval_cmd, eval_o);
  eval_cmd->add_option("--checkpoints", eval_ckpt)->required();
  eval_cmd->add_option("--stem", eval_stem);

  std::string attr_ckpt, attr_stem = "model", attr_record, attr_method = "grad_x_input";
  std::size_t attr_target = 1;
  auto* attr_cmd = app.add_subcommand("attribute", "per-sample relevance for one record");
  add_run_options(attr_cmd, attr_o);
  attr_cmd->add_option("--checkpoints", attr_ckpt)->required();
  attr_cmd->add_option("--stem", attr_stem);
  attr_cmd->add_option("--record", attr_record)->required();
  attr_cmd->add_option("--method", attr_method)
      ->check(CLI::IsMember({"grad_x_input", "integrated_gradients", "epsilon_lrp"}));
  attr_cmd->add_option("--target", attr_target);

  std::string report_csv_path;
  auto* report_cmd = app.add_subcommand("report", "summarize a report.csv");
  report_cmd->add_option("csv", report_csv_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(scfg, synth_out);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest_o);
    if (cv_cmd->parsed()) return cmd_crossval(cv_o);
    if (train_cmd->parsed()) return cmd_train(train_o);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_o, eval_ckpt, eval_stem);
    if (attr_cmd->parsed())
      return cmd_attribute(attr_o, attr_ckpt, attr_stem, attr_record, attr_method, attr_target);
    if (report_cmd->parsed()) return cmd_report(report_csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
