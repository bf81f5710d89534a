#include "ecgforge/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>
#include <random>

namespace ecgforge::synth {

namespace {

using wfdb::LeadId;

struct Bump {
  double center;  // seconds relative to the R peak
  double amp;     // mV in the reference lead
  double width;   // seconds
};

// canonical beat morphology; per-lead amplitude scaling below
constexpr Bump kP{-0.20, 0.12, 0.025};
constexpr Bump kQ{-0.04, -0.12, 0.010};
constexpr Bump kR{0.00, 1.00, 0.012};
constexpr Bump kS{0.045, -0.22, 0.010};
constexpr Bump kT{0.30, 0.32, 0.050};

double lead_scale(LeadId id) {
  switch (id) {
    case LeadId::I: return 0.7;
    case LeadId::II: return 1.0;
    case LeadId::V1: return -0.4;
    case LeadId::V2: return 0.6;
    case LeadId::V3: return 1.1;
    case LeadId::V4: return 1.4;
    case LeadId::V5: return 1.2;
    case LeadId::V6: return 0.9;
    case LeadId::vx: return 0.9;
    case LeadId::vy: return 0.8;
    case LeadId::vz: return -0.5;
    default: return 1.0;
  }
}

bool st_affected(LeadId id, const std::string& localization) {
  if (localization.empty()) return false;
  const bool anterior = localization.find("antero") != std::string::npos ||
                        localization.find("anterior") != std::string::npos;
  if (anterior)
    return id == LeadId::V1 || id == LeadId::V2 || id == LeadId::V3 || id == LeadId::V4 ||
           id == LeadId::vx;
  // inferior / posterior variants express on the inferior-facing leads
  return id == LeadId::II || id == LeadId::vy || id == LeadId::V6;
}

double gauss(double t, const Bump& b) {
  const double d = (t - b.center) / b.width;
  return b.amp * std::exp(-0.5 * d * d);
}

// single beat sampled at offset t (s) from the R peak
double beat(double t, double scale, bool st, double q_gain, double st_mv) {
  double v = scale * (gauss(t, kP) + gauss(t, kR) + gauss(t, kS) + gauss(t, kT)) +
             scale * q_gain * gauss(t, kQ);
  if (st) {
    // smooth plateau between the S wave and the end of the T wave
    const double rise = 1.0 / (1.0 + std::exp(-(t - 0.06) / 0.008));
    const double fall = 1.0 / (1.0 + std::exp((t - 0.32) / 0.02));
    v += st_mv * rise * fall;
  }
  return v;
}

}  // namespace

std::string localization_for(std::size_t index) {
  static const std::vector<std::string> cycle = {
      "anterior", "inferior", "antero-septal", "infero-lateral", "antero-lateral",
      "infero-posterior",
  };
  return cycle[index % cycle.size()];
}

wfdb::SignalRecord make_record(const SynthConfig& cfg, const std::string& record_id,
                               const std::string& patient_id,
                               const std::string& localization, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_mv);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);

  const std::size_t n = static_cast<std::size_t>(cfg.duration_s * cfg.sampling_rate);
  const bool mi = !localization.empty();
  const double q_gain = mi ? 3.0 : 1.0;
  const double st_mv = mi ? cfg.st_offset_mv : 0.0;

  // beat times with per-beat RR jitter
  std::vector<double> r_times;
  const double rr = 60.0 / cfg.heart_rate_bpm;
  for (double t = 0.4; t < cfg.duration_s + rr; t += rr * (1.0 + jitter(rng)))
    r_times.push_back(t);

  const auto& order = wfdb::all15_order();
  const std::size_t c = order.size();

  // continuous (pre-quantization) signals; limb leads derived from I/II
  std::vector<std::vector<double>> sig(c, std::vector<double>(n, 0.0));
  auto synth_channel = [&](std::size_t ch) {
    const LeadId id = order[ch];
    const bool st = st_affected(id, localization);
    const double scale = lead_scale(id);
    const double wander_phase = std::uniform_real_distribution<double>(0.0, 6.28)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / cfg.sampling_rate;
      double v = 0.02 * std::sin(2.0 * M_PI * 0.25 * t + wander_phase) + noise(rng);
      for (double rt : r_times)
        if (std::fabs(t - rt) < 0.6) v += beat(t - rt, scale, st, q_gain, st_mv);
      sig[ch][i] = v;
    }
  };

  std::size_t idx_i = 0, idx_ii = 1;
  for (std::size_t ch = 0; ch < c; ++ch) {
    switch (order[ch]) {
      case LeadId::III:
      case LeadId::aVR:
      case LeadId::aVL:
      case LeadId::aVF:
        break;  // filled from I/II below
      default:
        synth_channel(ch);
        if (order[ch] == LeadId::I) idx_i = ch;
        if (order[ch] == LeadId::II) idx_ii = ch;
    }
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = sig[idx_i][i], b = sig[idx_ii][i];
      switch (order[ch]) {
        case LeadId::III: sig[ch][i] = b - a; break;
        case LeadId::aVR: sig[ch][i] = -(a + b) / 2.0; break;
        case LeadId::aVL: sig[ch][i] = a - b / 2.0; break;
        case LeadId::aVF: sig[ch][i] = b - a / 2.0; break;
        default: break;
      }
    }
  }

  wfdb::SignalRecord rec;
  rec.header.record_name = record_id;
  rec.header.num_signals = c;
  rec.header.sampling_rate = cfg.sampling_rate;
  rec.header.num_samples = n;
  // synthetic but well-formed admission date, unique-ish per seed
  {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", static_cast<int>(seed % 28) + 1,
                  static_cast<int>((seed / 28) % 12) + 1, 1990 + static_cast<int>(seed % 9));
    rec.header.base_date = buf;
  }
  rec.header.comments["Reason for admission"] =
      mi ? "Myocardial infarction" : "Healthy control";
  if (mi) rec.header.comments["Acute infarction (localization)"] = localization;
  rec.header.comments["Patient"] = patient_id;

  for (std::size_t ch = 0; ch < c; ++ch) {
    wfdb::SignalSpec s;
    s.file_name = record_id + ".dat";
    s.storage_format = 16;
    s.gain = cfg.gain;
    s.adc_resolution = 16;
    s.adc_zero = 0;
    s.lead = wfdb::lead_name(order[ch]);
    s.lead_id = order[ch];
    rec.header.signals.push_back(s);
  }
  rec.samples.resize(n * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) rec.samples[i * c + ch] = sig[ch][i];
  return rec;
}

void generate_corpus(const SynthConfig& cfg, const std::string& root) {
  namespace fs = std::filesystem;
  std::size_t mi_index = 0;
  const std::size_t total = cfg.num_mi_patients + cfg.num_hc_patients;
  for (std::size_t p = 0; p < total; ++p) {
    const bool mi = p < cfg.num_mi_patients;
    char pid[32];
    std::snprintf(pid, sizeof pid, "patient%03zu", p + 1);
    const std::string localization = mi ? localization_for(mi_index++) : "";
    const fs::path dir = fs::path(root) / pid;
    fs::create_directories(dir);
    for (std::size_t r = 0; r < cfg.records_per_patient; ++r) {
      char rid[32];
      std::snprintf(rid, sizeof rid, "p%03zur%02zu", p + 1, r);
      const std::uint64_t seed = cfg.seed * 1000003ULL + p * 131ULL + r;
      auto rec = make_record(cfg, rid, pid, localization, seed);
      wfdb::save_record(rec, dir.string());
    }
  }
}

}  // namespace ecgforge::synth
