#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ecgforge/attribution.hpp"
#include "ecgforge/checkpoint.hpp"
#include "ecgforge/dataset.hpp"
#include "ecgforge/synth.hpp"
#include "ecgforge/training.hpp"

namespace py = pybind11;
using namespace ecgforge;

namespace {

wfdb::ChannelSelection channels_from_name(const std::string& s) {
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

py::dict metrics_dict(const train::ConfusionMatrix& cm) {
  py::dict d;
  d["tp"] = cm.tp;
  d["fn"] = cm.fn;
  d["tn"] = cm.tn;
  d["fp"] = cm.fp;
  const auto m = train::compute_metrics(cm);
  d["sensitivity"] = m.sensitivity;
  d["specificity"] = m.specificity;
  d["precision"] = m.precision;
  d["youden_j"] = m.youden_j;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ecgforge, m) {
  m.doc() = "ECG myocardial-infarction classification pipeline";

  m.def(
      "generate_synthetic",
      [](const std::string& out_dir, std::size_t mi, std::size_t hc, double duration_s,
         std::uint64_t seed) {
        synth::SynthConfig cfg;
        cfg.num_mi_patients = mi;
        cfg.num_hc_patients = hc;
        cfg.duration_s = duration_s;
        cfg.seed = seed;
        synth::generate_corpus(cfg, out_dir);
      },
      py::arg("out_dir"), py::arg("mi") = 20, py::arg("hc") = 20,
      py::arg("duration_s") = 10.0, py::arg("seed") = 0,
      "Write a synthetic WFDB record corpus under out_dir.");

  m.def(
      "load_record",
      [](const std::string& hea_path) {
        auto rec = wfdb::load_record(hea_path);
        py::dict d;
        d["name"] = rec.header.record_name;
        d["sampling_rate"] = rec.header.sampling_rate;
        d["num_samples"] = rec.header.num_samples;
        std::vector<std::string> leads;
        for (const auto& s : rec.header.signals) leads.push_back(s.lead);
        d["leads"] = leads;
        d["samples"] = rec.samples;  // row-major [num_samples x num_signals], mV
        return d;
      },
      py::arg("hea_path"), "Parse a record header + signal file into a dict.");

  m.def("preset_names", &dataset::preset_names,
        "Names of the built-in benchmark experiment presets.");

  m.def(
      "compute_metrics",
      [](std::size_t tp, std::size_t fn, std::size_t tn, std::size_t fp) {
        return metrics_dict({tp, fn, tn, fp});
      },
      py::arg("tp"), py::arg("fn"), py::arg("tn"), py::arg("fp"),
      "Sensitivity, specificity, precision and Youden J for one confusion matrix.");

  m.def(
      "downsample",
      [](const std::vector<double>& data, std::size_t channels, std::size_t target_length) {
        windowing::Window w;
        w.channels = channels;
        w.length = data.size() / channels;
        w.data = data;
        return windowing::downsample(w, target_length).data;
      },
      py::arg("data"), py::arg("channels"), py::arg("target_length"),
      "Linear-interpolation downsampling of a [length x channels] row-major slab.");

  m.def(
      "fft_magnitudes",
      [](const std::vector<double>& values) {
        windowing::Window w;
        w.channels = 1;
        w.length = values.size();
        w.data = values;
        windowing::FftConfig cfg;
        cfg.d = values.size();
        return windowing::fft_features(w, cfg).data;
      },
      py::arg("values"),
      "Zero-padded FFT magnitude spectrum (non-redundant bins) of one channel.");

  m.def(
      "crossval",
      [](const std::string& data_root, const std::string& channels, const std::string& model,
         std::size_t filters, std::size_t epochs, std::size_t members, std::size_t folds,
         std::uint64_t seed) {
        auto chan = channels_from_name(channels);
        auto entries = dataset::scan_data_root(data_root);
        auto selection = dataset::select_records(entries);
        dataset::assign_folds(selection, folds, seed);
        train::RecordMap records;
        for (const auto& e : selection.entries) {
          auto path = dataset::find_record_path(data_root, e.record_id);
          if (!path) throw DataError("record not found: " + e.record_id);
          records[e.record_id] = wfdb::select_channels(wfdb::load_record(*path), chan);
        }
        models::ModelSpec spec;
        spec.kind = model == "lstm"        ? models::ModelKind::lstm_final
                    : model == "lstm-joint" ? models::ModelKind::lstm_joint
                                            : models::parse_model_kind(model);
        spec.channels = wfdb::leads_for(chan).size();
        spec.filters = filters;
        train::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.ensemble_members = members;
        cfg.seed = seed;
        dataset::ExperimentPreset preset;
        preset.name = "python";
        preset.channels = chan;
        auto report = train::run_crossval(preset, selection, records, spec, cfg, folds);
        auto d = metrics_dict(report.pooled());
        d["folds"] = report.folds.size();
        d["report_csv"] = train::report_csv(report);
        return d;
      },
      py::arg("data_root"), py::arg("channels") = "eight", py::arg("model") = "fcn",
      py::arg("filters") = 16, py::arg("epochs") = 10, py::arg("members") = 1,
      py::arg("folds") = 10, py::arg("seed") = 0,
      "Patient-stratified k-fold cross-validation over a record tree; returns pooled metrics.");
}
