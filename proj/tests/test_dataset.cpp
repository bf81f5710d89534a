#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <set>

#include "doctest.h"
#include "ecgforge/dataset.hpp"

using namespace ecgforge;
using dataset::DiagnosisGroup;
using dataset::RecordEntry;

namespace {

RecordEntry entry(const std::string& pid, const std::string& rid, DiagnosisGroup g,
                  std::optional<long> date = std::nullopt) {
  RecordEntry e;
  e.patient_id = pid;
  e.record_id = rid;
  e.label.mi = g != DiagnosisGroup::HC;
  e.label.group = g;
  e.record_date_ord = date;
  return e;
}

}  // namespace

TEST_CASE("localization grouping") {
  // anterior-territory localizations
  for (const char* s : {"anterior", "antero-septal", "antero-septo-lateral", "antero-lateral",
                        "lateral"})
    CHECK(dataset::group_subdiagnosis(s) == DiagnosisGroup::aMI);
  // inferior-territory localizations
  for (const char* s : {"inferior", "infero-posterior", "infero-postero-lateral",
                        "infero-lateral", "posterior", "postero-lateral"})
    CHECK(dataset::group_subdiagnosis(s) == DiagnosisGroup::iMI);
  CHECK(dataset::group_subdiagnosis("  Anterior ") == DiagnosisGroup::aMI);
  CHECK(dataset::group_subdiagnosis("INFERIOR") == DiagnosisGroup::iMI);
  CHECK_THROWS_AS(dataset::group_subdiagnosis("septal-ish"), UnknownLocalizationError);
  CHECK_THROWS_AS(dataset::group_subdiagnosis(""), UnknownLocalizationError);
}

TEST_CASE("record selection policy") {
  std::vector<RecordEntry> all{
      entry("pA", "a1", DiagnosisGroup::aMI, 100),
      entry("pA", "a0", DiagnosisGroup::aMI, 50),   // earlier -> chosen
      entry("pA", "a2", DiagnosisGroup::aMI, 200),
      entry("pB", "b0", DiagnosisGroup::iMI),        // no dates: lowest id
      entry("pB", "b1", DiagnosisGroup::iMI),
      entry("pC", "c0", DiagnosisGroup::unknownMI),  // dropped entirely
      entry("pH", "h0", DiagnosisGroup::HC),
      entry("pH", "h1", DiagnosisGroup::HC),         // HC keeps every record
  };
  auto sel = dataset::select_records(all);
  std::set<std::string> ids;
  for (const auto& e : sel.entries) ids.insert(e.record_id);
  CHECK(ids == std::set<std::string>{"a0", "b0", "h0", "h1"});

  auto keep_all = dataset::select_records(all, true);
  ids.clear();
  for (const auto& e : keep_all.entries) ids.insert(e.record_id);
  CHECK(ids == std::set<std::string>{"a0", "a1", "a2", "b0", "b1", "h0", "h1"});

  // same-date tie resolves to the lowest record id
  std::vector<RecordEntry> tie{entry("p", "x9", DiagnosisGroup::aMI, 7),
                               entry("p", "x1", DiagnosisGroup::aMI, 7),
                               entry("q", "q0", DiagnosisGroup::HC)};
  auto tsel = dataset::select_records(tie);
  bool found = false;
  for (const auto& e : tsel.entries) found |= e.record_id == "x1";
  CHECK(found);
}

TEST_CASE("empty selection is an error") {
  std::vector<RecordEntry> only_unknown{entry("p", "r", DiagnosisGroup::unknownMI)};
  CHECK_THROWS_AS(dataset::select_records(only_unknown), EmptySelectionError);
}

TEST_CASE("stratified fold assignment") {
  // 52 HC, 62 aMI, 65 iMI patients -> 179 patients over 10 folds
  std::vector<RecordEntry> all;
  auto add = [&](DiagnosisGroup g, int n, const std::string& tag) {
    for (int i = 0; i < n; ++i)
      all.push_back(entry(tag + std::to_string(i), tag + "r" + std::to_string(i), g));
  };
  add(DiagnosisGroup::HC, 52, "hc");
  add(DiagnosisGroup::aMI, 62, "a");
  add(DiagnosisGroup::iMI, 65, "i");
  auto sel = dataset::select_records(all);
  dataset::assign_folds(sel, 10, 42);

  std::map<int, std::set<std::string>> patients_per_fold;
  std::map<int, int> per_stratum_count[3];
  for (const auto& e : sel.entries) {
    const int f = sel.fold_of.at(e.record_id);
    CHECK(f >= 0);
    CHECK(f < 10);
    patients_per_fold[f].insert(e.patient_id);
  }
  // 179 patients in 10 folds: every fold holds 17 or 18
  std::size_t total = 0;
  for (const auto& [f, ps] : patients_per_fold) {
    CHECK(ps.size() >= 17);
    CHECK(ps.size() <= 18);
    total += ps.size();
  }
  CHECK(total == 179);

  // per-stratum balance within one patient
  for (DiagnosisGroup g : {DiagnosisGroup::HC, DiagnosisGroup::aMI, DiagnosisGroup::iMI}) {
    std::map<int, std::set<std::string>> per_fold;
    for (const auto& e : sel.entries)
      if (e.label.group == g) per_fold[sel.fold_of.at(e.record_id)].insert(e.patient_id);
    std::size_t lo = 1000, hi = 0;
    for (const auto& [f, ps] : per_fold) {
      lo = std::min(lo, ps.size());
      hi = std::max(hi, ps.size());
    }
    CHECK(hi - lo <= 1);
  }

  // deterministic in the seed
  auto sel2 = dataset::select_records(all);
  dataset::assign_folds(sel2, 10, 42);
  CHECK(sel2.fold_of == sel.fold_of);
  dataset::assign_folds(sel2, 10, 43);
  CHECK(sel2.fold_of != sel.fold_of);
}

TEST_CASE("all records of one patient land in one fold") {
  std::vector<RecordEntry> all;
  for (int p = 0; p < 12; ++p) {
    const std::string pid = "p" + std::to_string(p);
    const auto g = p < 4 ? DiagnosisGroup::HC : (p < 8 ? DiagnosisGroup::aMI : DiagnosisGroup::iMI);
    for (int r = 0; r < 3; ++r)
      all.push_back(entry(pid, pid + "r" + std::to_string(r), g));
  }
  auto sel = dataset::select_records(all, true);
  dataset::assign_folds(sel, 4, 7);
  std::map<std::string, std::set<int>> folds_of_patient;
  for (const auto& e : sel.entries)
    folds_of_patient[e.patient_id].insert(sel.fold_of.at(e.record_id));
  for (const auto& [pid, fs] : folds_of_patient) CHECK(fs.size() == 1);
}

TEST_CASE("stratification errors") {
  std::vector<RecordEntry> all;
  for (int i = 0; i < 5; ++i) all.push_back(entry("h" + std::to_string(i), "hr" + std::to_string(i), DiagnosisGroup::HC));
  for (int i = 0; i < 5; ++i) all.push_back(entry("a" + std::to_string(i), "ar" + std::to_string(i), DiagnosisGroup::aMI));
  for (int i = 0; i < 5; ++i) all.push_back(entry("i" + std::to_string(i), "ir" + std::to_string(i), DiagnosisGroup::iMI));
  auto sel = dataset::select_records(all);
  CHECK_THROWS_AS(dataset::assign_folds(sel, 6, 0), StratificationError);
  CHECK_THROWS_AS(dataset::assign_folds(sel, 1, 0), StratificationError);
  CHECK_NOTHROW(dataset::assign_folds(sel, 5, 0));
}

TEST_CASE("oversampling plan doubles healthy controls") {
  std::vector<RecordEntry> all{entry("h", "h0", DiagnosisGroup::HC),
                               entry("a", "a0", DiagnosisGroup::aMI),
                               entry("i", "i0", DiagnosisGroup::iMI)};
  auto sel = dataset::select_records(all);
  auto plan = dataset::make_sampling_plan(sel);
  CHECK(plan.epoch_multiplicity.at("h0") == 2);
  CHECK(plan.epoch_multiplicity.at("a0") == 1);
  CHECK(plan.epoch_multiplicity.at("i0") == 1);
}

TEST_CASE("experiment presets") {
  for (const auto& name : dataset::preset_names()) CHECK_NOTHROW(dataset::benchmark_preset(name));
  CHECK_THROWS_AS(dataset::benchmark_preset("nope"), ConfigError);

  auto p3 = dataset::benchmark_preset("table3_default");
  CHECK(p3.channels.set == wfdb::ChannelSet::eight_nonredundant);
  CHECK(p3.scheme == dataset::LabelScheme::binary_mi_vs_hc);
  CHECK(!p3.keep_all_mi_ecgs);

  auto p5 = dataset::benchmark_preset("table5_literature");
  CHECK(p5.channels.set == wfdb::ChannelSet::limb);
  CHECK(p5.keep_all_mi_ecgs);
  CHECK(p5.eval_subset == dataset::EvalSubset::imi);

  auto frank = dataset::benchmark_preset("table6_frank");
  CHECK(frank.channels.set == wfdb::ChannelSet::frank);
  auto p43 = dataset::benchmark_preset("table4_train_amiimi_eval_mi");
  CHECK(p43.scheme == dataset::LabelScheme::three_class);
}

TEST_CASE("entry construction from record header") {
  wfdb::RecordHeader h;
  h.record_name = "r0";
  h.base_date = "14/03/1991";
  h.comments["Reason for admission"] = "Myocardial infarction";
  h.comments["Acute infarction (localization)"] = "infero-lateral";
  auto e = dataset::entry_from_header(h, "pat1");
  REQUIRE(e);
  CHECK(e->label.mi);
  CHECK(e->label.group == DiagnosisGroup::iMI);
  CHECK(e->record_date_ord.has_value());

  h.comments["Acute infarction (localization)"] = "unknown";
  auto u = dataset::entry_from_header(h, "pat1");
  REQUIRE(u);
  CHECK(u->label.group == DiagnosisGroup::unknownMI);

  wfdb::RecordHeader hc;
  hc.record_name = "r1";
  hc.comments["Reason for admission"] = "Healthy control";
  auto he = dataset::entry_from_header(hc, "pat2");
  REQUIRE(he);
  CHECK(!he->label.mi);

  wfdb::RecordHeader other;
  other.record_name = "r2";
  other.comments["Reason for admission"] = "Dysrhythmia";
  CHECK(!dataset::entry_from_header(other, "pat3"));
}

TEST_CASE("manifest csv round-trip") {
  std::vector<RecordEntry> all{entry("h", "h0", DiagnosisGroup::HC),
                               entry("a", "a0", DiagnosisGroup::aMI),
                               entry("b", "b0", DiagnosisGroup::aMI),
                               entry("i", "i0", DiagnosisGroup::iMI),
                               entry("j", "j0", DiagnosisGroup::iMI)};
  auto sel = dataset::select_records(all);
  sel.fold_of = {{"h0", 0}, {"a0", 1}, {"b0", 0}, {"i0", 1}, {"j0", 0}};
  const auto csv = dataset::manifest_csv(sel);
  auto back = dataset::parse_manifest_csv(csv);
  CHECK(back.entries.size() == sel.entries.size());
  CHECK(back.fold_of == sel.fold_of);
  for (std::size_t i = 0; i < sel.entries.size(); ++i) {
    CHECK(back.entries[i].record_id == sel.entries[i].record_id);
    CHECK(back.entries[i].patient_id == sel.entries[i].patient_id);
    CHECK(back.entries[i].label.group == sel.entries[i].label.group);
  }
  CHECK(dataset::manifest_csv(back) == csv);
}
