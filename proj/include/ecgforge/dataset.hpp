#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"
#include "ecgforge/wfdb.hpp"

namespace ecgforge::dataset {

enum class DiagnosisGroup { HC, aMI, iMI, unknownMI };

std::string group_name(DiagnosisGroup g);

/// Maps an infarction localization string onto the aggregated aMI/iMI
/// groups. Case-insensitive, whitespace-trimmed. Throws
/// UnknownLocalizationError for anything outside the known localizations.
DiagnosisGroup group_subdiagnosis(const std::string& localization);

struct DiagnosisLabel {
  bool mi = false;
  std::string localization;  // empty for HC
  DiagnosisGroup group = DiagnosisGroup::HC;
};

struct RecordEntry {
  std::string patient_id;
  std::string record_id;
  DiagnosisLabel label;
  std::optional<long> record_date_ord;  // days, comparable; absent if unknown
  std::optional<bool> treated;
};

enum class LabelScheme { binary_mi_vs_hc, three_class };

struct DatasetSelection {
  std::vector<RecordEntry> entries;
  LabelScheme scheme = LabelScheme::binary_mi_vs_hc;
  std::map<std::string, int> fold_of;  // record_id -> fold
};

/// Record-selection policy: drop MI records with unknown localization,
/// keep every HC record, keep only the chronologically first record per
/// MI patient (lowest record id when dates are missing). With
/// `keep_all_mi_ecgs` the per-patient restriction is lifted (literature
/// benchmark setup).
DatasetSelection select_records(const std::vector<RecordEntry>& all_records,
                                bool keep_all_mi_ecgs = false);

/// Patient-level stratified fold assignment over strata {HC, aMI, iMI}.
void assign_folds(DatasetSelection& selection, std::size_t k, std::uint64_t seed);

struct SamplingPlan {
  std::map<std::string, std::size_t> epoch_multiplicity;  // record_id -> count
};

/// 2:1 oversampling of the HC minority class.
SamplingPlan make_sampling_plan(const DatasetSelection& selection);

enum class EvalSubset { mi, ami, imi };
enum class TrainSubset { mi, ami_imi, ami_only, imi_only };

struct ExperimentPreset {
  std::string name;
  wfdb::ChannelSelection channels;
  LabelScheme scheme = LabelScheme::binary_mi_vs_hc;
  TrainSubset train_subset = TrainSubset::mi;
  EvalSubset eval_subset = EvalSubset::mi;
  bool keep_all_mi_ecgs = false;
};

ExperimentPreset benchmark_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parse a selection entry out of a record header; nullopt when the
/// record belongs to neither the HC nor the MI class.
std::optional<RecordEntry> entry_from_header(const wfdb::RecordHeader& header,
                                             const std::string& patient_id);

/// Scan `<root>/<patient>/<record>.hea` and collect candidate entries.
std::vector<RecordEntry> scan_data_root(const std::string& root);

/// Path of the .hea file for a record id under the data root.
std::optional<std::string> find_record_path(const std::string& root,
                                            const std::string& record_id);

std::string manifest_csv(const DatasetSelection& selection);
DatasetSelection parse_manifest_csv(const std::string& csv);

}  // namespace ecgforge::dataset
