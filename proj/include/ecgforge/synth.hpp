#pragma once

#include <cstdint>
#include <string>

#include "ecgforge/wfdb.hpp"

namespace ecgforge::synth {

struct SynthConfig {
  std::size_t num_mi_patients = 20;
  std::size_t num_hc_patients = 20;
  std::size_t records_per_patient = 1;
  double sampling_rate = 1000.0;
  double duration_s = 10.0;
  double gain = 2000.0;  // ADC units per mV
  double heart_rate_bpm = 72.0;
  double noise_mv = 0.05;
  double st_offset_mv = 0.2;  // ST-segment shift on infarction-facing leads
  std::uint64_t seed = 0;
};

/// One 15-channel record. Limb leads III/aVR/aVL/aVF are computed from
/// the continuous I and II signals before quantization. `localization`
/// is empty for healthy records.
wfdb::SignalRecord make_record(const SynthConfig& cfg, const std::string& record_id,
                               const std::string& patient_id,
                               const std::string& localization, std::uint64_t seed);

/// Localization assigned to MI patient `index`; cycles through anterior
/// and inferior variants so both aggregated groups are populated evenly.
std::string localization_for(std::size_t index);

/// Write a `<root>/<patient>/<record>.{hea,dat}` corpus.
void generate_corpus(const SynthConfig& cfg, const std::string& root);

}  // namespace ecgforge::synth
