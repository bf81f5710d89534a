#include "ecgforge/wfdb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ecgforge::wfdb {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

long parse_long(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw FormatError(std::string("non-numeric ") + what + ": " + tok);
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError(std::string("non-numeric ") + what + ": " + tok);
  }
}

double parse_double(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw FormatError(std::string("non-numeric ") + what + ": " + tok);
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError(std::string("non-numeric ") + what + ": " + tok);
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

bool CaseInsensitiveLess::operator()(const std::string& a, const std::string& b) const {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(), [](unsigned char x, unsigned char y) {
        return std::tolower(x) < std::tolower(y);
      });
}

std::string lead_name(LeadId id) {
  switch (id) {
    case LeadId::I: return "i";
    case LeadId::II: return "ii";
    case LeadId::III: return "iii";
    case LeadId::aVR: return "avr";
    case LeadId::aVL: return "avl";
    case LeadId::aVF: return "avf";
    case LeadId::V1: return "v1";
    case LeadId::V2: return "v2";
    case LeadId::V3: return "v3";
    case LeadId::V4: return "v4";
    case LeadId::V5: return "v5";
    case LeadId::V6: return "v6";
    case LeadId::vx: return "vx";
    case LeadId::vy: return "vy";
    case LeadId::vz: return "vz";
    case LeadId::unknown: return "?";
  }
  return "?";
}

LeadId parse_lead(const std::string& name) {
  static const std::map<std::string, LeadId> table{
      {"i", LeadId::I},     {"ii", LeadId::II},   {"iii", LeadId::III},
      {"avr", LeadId::aVR}, {"avl", LeadId::aVL}, {"avf", LeadId::aVF},
      {"v1", LeadId::V1},   {"v2", LeadId::V2},   {"v3", LeadId::V3},
      {"v4", LeadId::V4},   {"v5", LeadId::V5},   {"v6", LeadId::V6},
      {"vx", LeadId::vx},   {"vy", LeadId::vy},   {"vz", LeadId::vz}};
  auto it = table.find(lower(trim(name)));
  return it == table.end() ? LeadId::unknown : it->second;
}

const std::vector<LeadId>& all15_order() {
  static const std::vector<LeadId> v{
      LeadId::I,  LeadId::II, LeadId::III, LeadId::aVR, LeadId::aVL,
      LeadId::aVF, LeadId::V1, LeadId::V2,  LeadId::V3,  LeadId::V4,
      LeadId::V5, LeadId::V6, LeadId::vx,  LeadId::vy,  LeadId::vz};
  return v;
}

const std::vector<LeadId>& twelve_lead_order() {
  static const std::vector<LeadId> v{
      LeadId::I,  LeadId::II, LeadId::III, LeadId::aVR, LeadId::aVL, LeadId::aVF,
      LeadId::V1, LeadId::V2, LeadId::V3,  LeadId::V4,  LeadId::V5,  LeadId::V6};
  return v;
}

const std::vector<LeadId>& eight_nonredundant_order() {
  static const std::vector<LeadId> v{LeadId::I,  LeadId::II, LeadId::V1, LeadId::V2,
                                     LeadId::V3, LeadId::V4, LeadId::V5, LeadId::V6};
  return v;
}

const std::vector<LeadId>& frank_order() {
  static const std::vector<LeadId> v{LeadId::vx, LeadId::vy, LeadId::vz};
  return v;
}

const std::vector<LeadId>& limb_order() {
  static const std::vector<LeadId> v{LeadId::I,   LeadId::II,  LeadId::III,
                                     LeadId::aVR, LeadId::aVL, LeadId::aVF};
  return v;
}

std::optional<std::string> RecordHeader::comment(const std::string& key) const {
  auto it = comments.find(key);
  if (it == comments.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SignalRecord::channel_of(LeadId id) const {
  for (std::size_t c = 0; c < header.signals.size(); ++c)
    if (header.signals[c].lead_id == id) return c;
  return std::nullopt;
}

RecordHeader parse_header(const std::string& text) {
  RecordHeader h;
  std::istringstream is(text);
  std::string line;
  bool record_line_seen = false;
  std::size_t signal_lines = 0;

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) {
        if (!body.empty()) h.comments[body];  // keep keyless comments verbatim
      } else {
        h.comments[trim(body.substr(0, colon))] = trim(body.substr(colon + 1));
      }
      continue;
    }
    if (!record_line_seen) {
      auto toks = split_ws(t);
      if (toks.size() < 4) throw FormatError("malformed record line: " + t);
      h.record_name = toks[0];
      const long nsig = parse_long(toks[1], "signal count");
      // sampling rate may carry a counter frequency suffix "fs/cf"
      std::string fs_tok = toks[2].substr(0, toks[2].find('/'));
      h.sampling_rate = parse_double(fs_tok, "sampling rate");
      const long nsamp = parse_long(toks[3], "sample count");
      if (nsig <= 0 || h.sampling_rate <= 0.0 || nsamp <= 0)
        throw FormatError("record line fields must be positive: " + t);
      h.num_signals = static_cast<std::size_t>(nsig);
      h.num_samples = static_cast<std::size_t>(nsamp);
      if (toks.size() > 4) h.base_time = toks[4];
      if (toks.size() > 5) h.base_date = toks[5];
      record_line_seen = true;
      continue;
    }
    // signal specification line
    auto toks = split_ws(t);
    if (toks.size() < 2) throw FormatError("malformed signal line: " + t);
    SignalSpec s;
    s.file_name = toks[0];
    const std::string fmt = toks[1].substr(0, toks[1].find_first_of("x:+"));
    const long format = parse_long(fmt, "storage format");
    if (format != 16) throw UnsupportedFormat("unsupported storage format " + toks[1]);
    s.storage_format = 16;
    if (toks.size() > 2) {
      std::string g = toks[2];
      g = g.substr(0, g.find_first_of("(/"));
      s.gain = parse_double(g, "gain");
      if (s.gain == 0.0) s.gain = 200.0;  // WFDB convention: 0 means default
      if (s.gain <= 0.0) throw FormatError("gain must be positive: " + toks[2]);
    }
    if (toks.size() > 3) s.adc_resolution = static_cast<int>(parse_long(toks[3], "adc resolution"));
    if (toks.size() > 4) s.adc_zero = static_cast<int>(parse_long(toks[4], "adc zero"));
    if (toks.size() > 5) s.initial_value = static_cast<int>(parse_long(toks[5], "initial value"));
    if (toks.size() > 6) s.checksum = static_cast<std::int16_t>(parse_long(toks[6], "checksum"));
    if (toks.size() > 8) {
      std::string desc = toks[8];
      for (std::size_t i = 9; i < toks.size(); ++i) desc += " " + toks[i];
      s.lead = desc;
    }
    s.lead_id = parse_lead(s.lead);
    h.signals.push_back(std::move(s));
    ++signal_lines;
  }
  if (!record_line_seen) throw FormatError("empty header");
  if (signal_lines != h.num_signals)
    throw FormatError("header declares " + std::to_string(h.num_signals) + " signals but has " +
                      std::to_string(signal_lines) + " signal lines");
  return h;
}

std::string format_header(const RecordHeader& h) {
  std::ostringstream os;
  os << h.record_name << " " << h.num_signals << " " << h.sampling_rate << " " << h.num_samples;
  if (!h.base_time.empty()) os << " " << h.base_time;
  if (!h.base_date.empty()) os << " " << h.base_date;
  os << "\n";
  for (const auto& s : h.signals) {
    os << s.file_name << " " << s.storage_format << " " << s.gain << " " << s.adc_resolution
       << " " << s.adc_zero << " " << s.initial_value << " " << s.checksum << " 0 " << s.lead
       << "\n";
  }
  for (const auto& [k, v] : h.comments) {
    os << "# " << k;
    if (!v.empty()) os << ": " << v;
    os << "\n";
  }
  return os.str();
}

SignalRecord read_signal(const RecordHeader& header, const std::vector<std::uint8_t>& bytes) {
  const std::size_t n = header.num_samples, c = header.num_signals;
  if (bytes.size() != 2 * n * c)
    throw FormatError("signal byte length " + std::to_string(bytes.size()) + " does not match " +
                      std::to_string(2 * n * c));
  SignalRecord rec;
  rec.header = header;
  rec.samples.resize(n * c);
  std::vector<std::uint16_t> sums(c, 0);
  for (std::size_t i = 0; i < n * c; ++i) {
    const std::uint16_t u = static_cast<std::uint16_t>(bytes[2 * i]) |
                            (static_cast<std::uint16_t>(bytes[2 * i + 1]) << 8);
    const std::int16_t raw = static_cast<std::int16_t>(u);
    const std::size_t ch = i % c;
    sums[ch] = static_cast<std::uint16_t>(sums[ch] + u);
    const auto& s = header.signals[ch];
    rec.samples[i] = (static_cast<double>(raw) - s.adc_zero) / s.gain;
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (static_cast<std::int16_t>(sums[ch]) != header.signals[ch].checksum)
      throw ChecksumError(static_cast<int>(ch),
                          "checksum mismatch on channel " + std::to_string(ch));
  }
  return rec;
}

std::pair<RecordHeader, std::vector<std::uint8_t>> write_signal(const SignalRecord& record) {
  RecordHeader h = record.header;
  const std::size_t n = h.num_samples, c = h.num_signals;
  if (record.samples.size() != n * c) throw ShapeError("sample matrix does not match header");
  std::vector<std::uint8_t> bytes(2 * n * c);
  std::vector<std::uint16_t> sums(c, 0);
  for (std::size_t i = 0; i < n * c; ++i) {
    const std::size_t ch = i % c;
    const auto& s = h.signals[ch];
    const long raw = std::lround(record.samples[i] * s.gain) + s.adc_zero;
    if (raw < -32768 || raw > 32767)
      throw FormatError("sample out of int16 range on channel " + std::to_string(ch));
    const std::uint16_t u = static_cast<std::uint16_t>(static_cast<std::int16_t>(raw));
    bytes[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
    sums[ch] = static_cast<std::uint16_t>(sums[ch] + u);
    if (i < c) h.signals[ch].initial_value = static_cast<int>(static_cast<std::int16_t>(raw));
  }
  for (std::size_t ch = 0; ch < c; ++ch)
    h.signals[ch].checksum = static_cast<std::int16_t>(sums[ch]);
  return {std::move(h), std::move(bytes)};
}

SignalRecord load_record(const std::string& hea_path) {
  std::ifstream hf(hea_path);
  if (!hf) throw FormatError("cannot open header " + hea_path);
  std::stringstream ss;
  ss << hf.rdbuf();
  RecordHeader h = parse_header(ss.str());
  const auto dir = std::filesystem::path(hea_path).parent_path();
  const std::string dat_name =
      h.signals.empty() ? h.record_name + ".dat" : h.signals[0].file_name;
  std::ifstream df(dir / dat_name, std::ios::binary);
  if (!df) throw FormatError("cannot open signal file " + (dir / dat_name).string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(df)),
                                  std::istreambuf_iterator<char>());
  return read_signal(h, bytes);
}

void save_record(const SignalRecord& record, const std::string& dir) {
  auto [h, bytes] = write_signal(record);
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / h.record_name;
  for (auto& s : h.signals) s.file_name = h.record_name + ".dat";
  std::ofstream hf(base.string() + ".hea");
  hf << format_header(h);
  std::ofstream df(base.string() + ".dat", std::ios::binary);
  df.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

namespace {

SignalSpec derived_spec(const SignalSpec& base, LeadId id) {
  SignalSpec s = base;
  s.lead = lead_name(id);
  s.lead_id = id;
  s.checksum = 0;
  return s;
}

}  // namespace

SignalRecord derive_limb_leads(const SignalRecord& record) {
  const auto ci = record.channel_of(LeadId::I);
  const auto cii = record.channel_of(LeadId::II);
  if (!ci || !cii) throw MissingLeadError("derive_limb_leads: leads I and II required");

  struct Derived {
    LeadId id;
    double wi, wii;  // coefficients on I and II
  };
  const Derived defs[] = {{LeadId::III, -1.0, 1.0},
                          {LeadId::aVR, -0.5, -0.5},
                          {LeadId::aVL, 1.0, -0.5},
                          {LeadId::aVF, -0.5, 1.0}};
  std::vector<Derived> missing;
  for (const auto& d : defs)
    if (!record.channel_of(d.id)) missing.push_back(d);
  if (missing.empty()) return record;

  const std::size_t n = record.header.num_samples;
  const std::size_t c_old = record.header.num_signals;
  const std::size_t c_new = c_old + missing.size();
  SignalRecord out;
  out.header = record.header;
  out.header.num_signals = c_new;
  for (const auto& d : missing)
    out.header.signals.push_back(derived_spec(record.header.signals[*ci], d.id));
  out.samples.resize(n * c_new);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t ch = 0; ch < c_old; ++ch)
      out.samples[t * c_new + ch] = record.samples[t * c_old + ch];
    const double vi = record.samples[t * c_old + *ci];
    const double vii = record.samples[t * c_old + *cii];
    for (std::size_t j = 0; j < missing.size(); ++j)
      out.samples[t * c_new + c_old + j] = missing[j].wi * vi + missing[j].wii * vii;
  }
  return out;
}

std::vector<LeadId> leads_for(const ChannelSelection& sel) {
  switch (sel.set) {
    case ChannelSet::all15: return all15_order();
    case ChannelSet::twelve: return twelve_lead_order();
    case ChannelSet::eight_nonredundant: return eight_nonredundant_order();
    case ChannelSet::frank: return frank_order();
    case ChannelSet::limb: return limb_order();
    case ChannelSet::single: return {sel.single};
  }
  throw ConfigError("leads_for: unknown channel set");
}

SignalRecord select_channels(const SignalRecord& record, const ChannelSelection& sel) {
  const auto wanted = leads_for(sel);
  const SignalRecord* src = &record;
  SignalRecord derived;
  for (LeadId id : wanted) {
    if (!record.channel_of(id)) {
      const bool derivable = id == LeadId::III || id == LeadId::aVR || id == LeadId::aVL ||
                             id == LeadId::aVF;
      if (!derivable) throw MissingLeadError("lead " + lead_name(id) + " not available");
      derived = derive_limb_leads(record);
      src = &derived;
      break;
    }
  }
  const std::size_t n = src->header.num_samples;
  const std::size_t c_src = src->header.num_signals;
  SignalRecord out;
  out.header = src->header;
  out.header.num_signals = wanted.size();
  out.header.signals.clear();
  std::vector<std::size_t> idx;
  for (LeadId id : wanted) {
    auto ch = src->channel_of(id);
    if (!ch) throw MissingLeadError("lead " + lead_name(id) + " not available");
    idx.push_back(*ch);
    out.header.signals.push_back(src->header.signals[*ch]);
  }
  out.samples.resize(n * wanted.size());
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < idx.size(); ++j)
      out.samples[t * wanted.size() + j] = src->samples[t * c_src + idx[j]];
  return out;
}

}  // namespace ecgforge::wfdb
