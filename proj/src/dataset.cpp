#include "ecgforge/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace ecgforge::dataset {

namespace {

std::string normalize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string group_name(DiagnosisGroup g) {
  switch (g) {
    case DiagnosisGroup::HC: return "HC";
    case DiagnosisGroup::aMI: return "aMI";
    case DiagnosisGroup::iMI: return "iMI";
    case DiagnosisGroup::unknownMI: return "unknownMI";
  }
  return "?";
}

DiagnosisGroup group_subdiagnosis(const std::string& localization) {
  static const std::map<std::string, DiagnosisGroup> table{
      {"anterior", DiagnosisGroup::aMI},
      {"antero-septal", DiagnosisGroup::aMI},
      {"antero-septo-lateral", DiagnosisGroup::aMI},
      {"antero-lateral", DiagnosisGroup::aMI},
      {"lateral", DiagnosisGroup::aMI},
      {"inferior", DiagnosisGroup::iMI},
      {"infero-posterior", DiagnosisGroup::iMI},
      {"infero-postero-lateral", DiagnosisGroup::iMI},
      {"infero-lateral", DiagnosisGroup::iMI},
      {"posterior", DiagnosisGroup::iMI},
      {"postero-lateral", DiagnosisGroup::iMI}};
  auto it = table.find(normalize(localization));
  if (it == table.end())
    throw UnknownLocalizationError("unknown infarction localization: " + localization);
  return it->second;
}

DatasetSelection select_records(const std::vector<RecordEntry>& all_records,
                                bool keep_all_mi_ecgs) {
  DatasetSelection sel;
  std::map<std::string, RecordEntry> first_mi;  // patient -> chosen record
  for (const auto& e : all_records) {
    if (!e.label.mi) {
      sel.entries.push_back(e);
      continue;
    }
    if (e.label.group == DiagnosisGroup::unknownMI) continue;
    if (keep_all_mi_ecgs) {
      sel.entries.push_back(e);
      continue;
    }
    auto it = first_mi.find(e.patient_id);
    if (it == first_mi.end()) {
      first_mi.emplace(e.patient_id, e);
      continue;
    }
    const auto& cur = it->second;
    bool replace;
    if (e.record_date_ord && cur.record_date_ord)
      replace = *e.record_date_ord < *cur.record_date_ord ||
                (*e.record_date_ord == *cur.record_date_ord && e.record_id < cur.record_id);
    else if (e.record_date_ord || cur.record_date_ord)
      replace = e.record_date_ord.has_value();  // dated beats undated
    else
      replace = e.record_id < cur.record_id;
    if (replace) it->second = e;
  }
  for (auto& [pid, e] : first_mi) sel.entries.push_back(e);
  std::sort(sel.entries.begin(), sel.entries.end(),
            [](const RecordEntry& a, const RecordEntry& b) { return a.record_id < b.record_id; });
  if (sel.entries.empty()) throw EmptySelectionError("record selection is empty");
  return sel;
}

void assign_folds(DatasetSelection& selection, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("fold count must be >= 2");
  // patient -> stratum
  std::map<std::string, DiagnosisGroup> stratum_of;
  for (const auto& e : selection.entries) {
    auto [it, inserted] = stratum_of.emplace(e.patient_id, e.label.group);
    if (!inserted && it->second != e.label.group && e.label.group != DiagnosisGroup::HC)
      it->second = e.label.group;
  }
  const DiagnosisGroup order[] = {DiagnosisGroup::HC, DiagnosisGroup::aMI, DiagnosisGroup::iMI};
  std::mt19937_64 rng(seed);
  std::map<std::string, int> patient_fold;
  std::size_t next_fold = 0;
  for (DiagnosisGroup g : order) {
    std::vector<std::string> patients;
    for (const auto& [pid, pg] : stratum_of)
      if (pg == g) patients.push_back(pid);
    if (patients.empty()) continue;
    if (patients.size() < k)
      throw StratificationError("stratum " + group_name(g) + " has fewer patients than folds");
    std::shuffle(patients.begin(), patients.end(), rng);
    // deal round-robin, carrying the fold offset across strata so the
    // per-fold totals stay within one patient of each other
    for (const auto& pid : patients) {
      patient_fold[pid] = static_cast<int>(next_fold % k);
      ++next_fold;
    }
  }
  selection.fold_of.clear();
  for (const auto& e : selection.entries)
    selection.fold_of[e.record_id] = patient_fold.at(e.patient_id);
}

SamplingPlan make_sampling_plan(const DatasetSelection& selection) {
  SamplingPlan plan;
  for (const auto& e : selection.entries)
    plan.epoch_multiplicity[e.record_id] = e.label.group == DiagnosisGroup::HC ? 2 : 1;
  return plan;
}

ExperimentPreset benchmark_preset(const std::string& name) {
  using wfdb::ChannelSet;
  ExperimentPreset p;
  p.name = name;
  auto chan = [&](ChannelSet s, wfdb::LeadId single = wfdb::LeadId::I) {
    p.channels.set = s;
    p.channels.single = single;
  };
  if (name == "table3_default") {
    chan(ChannelSet::eight_nonredundant);
  } else if (name == "table4_train_mi_eval_mi") {
    chan(ChannelSet::eight_nonredundant);
  } else if (name == "table4_train_mi_eval_ami") {
    chan(ChannelSet::eight_nonredundant);
    p.eval_subset = EvalSubset::ami;
  } else if (name == "table4_train_mi_eval_imi") {
    chan(ChannelSet::eight_nonredundant);
    p.eval_subset = EvalSubset::imi;
  } else if (name == "table4_train_ami_eval_ami") {
    chan(ChannelSet::eight_nonredundant);
    p.train_subset = TrainSubset::ami_only;
    p.eval_subset = EvalSubset::ami;
  } else if (name == "table4_train_imi_eval_imi") {
    chan(ChannelSet::eight_nonredundant);
    p.train_subset = TrainSubset::imi_only;
    p.eval_subset = EvalSubset::imi;
  } else if (name == "table4_train_amiimi_eval_mi") {
    chan(ChannelSet::eight_nonredundant);
    p.scheme = LabelScheme::three_class;
    p.train_subset = TrainSubset::ami_imi;
  } else if (name == "table4_train_amiimi_eval_ami") {
    chan(ChannelSet::eight_nonredundant);
    p.scheme = LabelScheme::three_class;
    p.train_subset = TrainSubset::ami_imi;
    p.eval_subset = EvalSubset::ami;
  } else if (name == "table4_train_amiimi_eval_imi") {
    chan(ChannelSet::eight_nonredundant);
    p.scheme = LabelScheme::three_class;
    p.train_subset = TrainSubset::ami_imi;
    p.eval_subset = EvalSubset::imi;
  } else if (name == "table5_literature") {
    chan(ChannelSet::limb);
    p.train_subset = TrainSubset::imi_only;
    p.eval_subset = EvalSubset::imi;
    p.keep_all_mi_ecgs = true;
  } else if (name == "table6_all15") {
    chan(ChannelSet::all15);
  } else if (name == "table6_twelve") {
    chan(ChannelSet::eight_nonredundant);  // 12 clinical leads, 8 non-redundant inputs
  } else if (name == "table6_frank") {
    chan(ChannelSet::frank);
  } else if (name == "table6_limb") {
    chan(ChannelSet::limb);
  } else if (name == "table6_I") {
    chan(ChannelSet::single, wfdb::LeadId::I);
  } else if (name == "table6_II") {
    chan(ChannelSet::single, wfdb::LeadId::II);
  } else if (name == "table6_III") {
    chan(ChannelSet::single, wfdb::LeadId::III);
  } else {
    throw ConfigError("unknown experiment preset: " + name);
  }
  return p;
}

std::vector<std::string> preset_names() {
  return {"table3_default",
          "table4_train_mi_eval_mi",
          "table4_train_mi_eval_ami",
          "table4_train_mi_eval_imi",
          "table4_train_ami_eval_ami",
          "table4_train_imi_eval_imi",
          "table4_train_amiimi_eval_mi",
          "table4_train_amiimi_eval_ami",
          "table4_train_amiimi_eval_imi",
          "table5_literature",
          "table6_all15",
          "table6_twelve",
          "table6_frank",
          "table6_limb",
          "table6_I",
          "table6_II",
          "table6_III"};
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<long> parse_date_ord(const std::string& s) {
  // dd/mm/yyyy
  int d = 0, m = 0, y = 0;
  if (std::sscanf(s.c_str(), "%d/%d/%d", &d, &m, &y) != 3) return std::nullopt;
  if (y < 100) y += 1900;
  return static_cast<long>(y) * 372 + m * 31 + d;  // ordering only
}

}  // namespace

std::optional<RecordEntry> entry_from_header(const wfdb::RecordHeader& header,
                                             const std::string& patient_id) {
  auto reason = header.comment("Reason for admission");
  if (!reason) reason = header.comment("Diagnose");
  if (!reason) return std::nullopt;
  const std::string r = lower(*reason);

  RecordEntry e;
  e.patient_id = patient_id;
  e.record_id = header.record_name;
  if (!header.base_date.empty()) e.record_date_ord = parse_date_ord(header.base_date);

  if (r.find("healthy control") != std::string::npos) {
    e.label.mi = false;
    e.label.group = DiagnosisGroup::HC;
    return e;
  }
  if (r.find("myocardial infarction") == std::string::npos) return std::nullopt;
  e.label.mi = true;
  auto loc = header.comment("Acute infarction (localization)");
  if (!loc) loc = header.comment("Infarction localization");
  if (!loc || loc->empty() || lower(*loc).find("unknown") != std::string::npos ||
      normalize(*loc) == "no") {
    e.label.group = DiagnosisGroup::unknownMI;
    return e;
  }
  e.label.localization = *loc;
  try {
    e.label.group = group_subdiagnosis(*loc);
  } catch (const UnknownLocalizationError&) {
    e.label.group = DiagnosisGroup::unknownMI;
  }
  return e;
}

std::vector<RecordEntry> scan_data_root(const std::string& root) {
  namespace fs = std::filesystem;
  std::vector<RecordEntry> out;
  if (!fs::is_directory(root)) throw DataError("data root not found: " + root);
  std::vector<fs::path> headers;
  for (const auto& patient : fs::directory_iterator(root)) {
    if (!patient.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(patient.path()))
      if (f.path().extension() == ".hea") headers.push_back(f.path());
  }
  std::sort(headers.begin(), headers.end());
  for (const auto& hea : headers) {
    std::ifstream in(hea);
    std::stringstream ss;
    ss << in.rdbuf();
    wfdb::RecordHeader h;
    try {
      h = wfdb::parse_header(ss.str());
    } catch (const FormatError&) {
      continue;  // skip unparsable records
    }
    auto e = entry_from_header(h, hea.parent_path().filename().string());
    if (e) out.push_back(*e);
  }
  return out;
}

std::optional<std::string> find_record_path(const std::string& root,
                                            const std::string& record_id) {
  namespace fs = std::filesystem;
  for (const auto& patient : fs::directory_iterator(root)) {
    if (!patient.is_directory()) continue;
    const auto p = patient.path() / (record_id + ".hea");
    if (fs::exists(p)) return p.string();
  }
  return std::nullopt;
}

std::string manifest_csv(const DatasetSelection& selection) {
  std::ostringstream os;
  os << "record_id,patient_id,label,group,fold\n";
  for (const auto& e : selection.entries) {
    auto it = selection.fold_of.find(e.record_id);
    os << e.record_id << "," << e.patient_id << "," << (e.label.mi ? "MI" : "HC") << ","
       << group_name(e.label.group) << "," << (it == selection.fold_of.end() ? -1 : it->second)
       << "\n";
  }
  return os.str();
}

DatasetSelection parse_manifest_csv(const std::string& csv) {
  DatasetSelection sel;
  std::istringstream is(csv);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (cols.size() != 5) throw FormatError("bad manifest row: " + line);
    RecordEntry e;
    e.record_id = cols[0];
    e.patient_id = cols[1];
    e.label.mi = cols[2] == "MI";
    if (cols[3] == "HC") e.label.group = DiagnosisGroup::HC;
    else if (cols[3] == "aMI") e.label.group = DiagnosisGroup::aMI;
    else if (cols[3] == "iMI") e.label.group = DiagnosisGroup::iMI;
    else e.label.group = DiagnosisGroup::unknownMI;
    sel.entries.push_back(e);
    const int fold = static_cast<int>(std::stol(cols[4]));
    if (fold >= 0) sel.fold_of[e.record_id] = fold;
  }
  if (sel.entries.empty()) throw EmptySelectionError("empty manifest");
  return sel;
}

}  // namespace ecgforge::dataset
