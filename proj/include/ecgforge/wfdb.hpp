#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge::wfdb {

enum class LeadId {
  I, II, III, aVR, aVL, aVF,
  V1, V2, V3, V4, V5, V6,
  vx, vy, vz,
  unknown
};

std::string lead_name(LeadId id);
LeadId parse_lead(const std::string& name);  // case-insensitive, unknown on miss

/// The 15-lead canonical order used throughout (PTB channel order).
const std::vector<LeadId>& all15_order();
const std::vector<LeadId>& twelve_lead_order();
const std::vector<LeadId>& eight_nonredundant_order();
const std::vector<LeadId>& frank_order();
const std::vector<LeadId>& limb_order();

struct SignalSpec {
  std::string file_name;
  int storage_format = 16;
  double gain = 200.0;        // ADC units per mV
  int adc_resolution = 12;
  int adc_zero = 0;
  int initial_value = 0;
  std::int16_t checksum = 0;
  std::string lead;           // description field, verbatim
  LeadId lead_id = LeadId::unknown;
};

struct CaseInsensitiveLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

struct RecordHeader {
  std::string record_name;
  std::size_t num_signals = 0;
  double sampling_rate = 0.0;
  std::size_t num_samples = 0;
  std::string base_time;  // optional, verbatim
  std::string base_date;  // optional, verbatim (dd/mm/yyyy)
  std::vector<SignalSpec> signals;
  std::map<std::string, std::string, CaseInsensitiveLess> comments;

  std::optional<std::string> comment(const std::string& key) const;
};

struct SignalRecord {
  RecordHeader header;
  /// [num_samples x num_signals], calibrated millivolts.
  std::vector<double> samples;

  double at(std::size_t sample, std::size_t channel) const {
    return samples[sample * header.num_signals + channel];
  }
  std::optional<std::size_t> channel_of(LeadId id) const;
};

RecordHeader parse_header(const std::string& text);
std::string format_header(const RecordHeader& h);

/// Decode little-endian interleaved int16 samples, calibrate to mV and
/// verify the per-channel 16-bit checksums against the header.
SignalRecord read_signal(const RecordHeader& header, const std::vector<std::uint8_t>& bytes);
/// Inverse of read_signal; recomputes checksums/initial values into the
/// returned header copy so write -> parse round-trips exactly.
std::pair<RecordHeader, std::vector<std::uint8_t>> write_signal(const SignalRecord& record);

SignalRecord load_record(const std::string& hea_path);
void save_record(const SignalRecord& record, const std::string& dir);

/// Append III, aVR, aVL, aVF reconstructed from I and II. Leads already
/// present are left untouched.
SignalRecord derive_limb_leads(const SignalRecord& record);

enum class ChannelSet { all15, twelve, eight_nonredundant, frank, limb, single };

struct ChannelSelection {
  ChannelSet set = ChannelSet::eight_nonredundant;
  LeadId single = LeadId::I;  // used when set == single
};

std::vector<LeadId> leads_for(const ChannelSelection& sel);
/// Channel-reduced record in canonical lead order; derives limb leads
/// when a requested lead is absent but derivable.
SignalRecord select_channels(const SignalRecord& record, const ChannelSelection& sel);

}  // namespace ecgforge::wfdb
