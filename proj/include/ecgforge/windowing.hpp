#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"
#include "ecgforge/wfdb.hpp"

namespace ecgforge::windowing {

using Rng = std::mt19937_64;

struct WindowConfig {
  double window_seconds = 4.0;
  std::size_t target_length = 192;
  std::size_t eval_windows_per_record = 32;
  std::size_t train_windows_per_record_per_epoch = 8;
  std::uint64_t rng_seed = 0;
};

/// [length x channels] row-major slab of calibrated samples.
struct Window {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  double at(std::size_t t, std::size_t c) const { return data[t * channels + c]; }
};

struct WindowBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> data;  // [batch x length x channels]
  std::vector<std::pair<std::string, std::size_t>> provenance;  // (record_id, offset)
};

struct FftConfig {
  std::size_t d = 192;
  std::size_t n_fft() const;        // 2^ceil(log2 d)
  std::size_t n_components() const; // n_fft/2 + 1
};

/// Contiguous random 4 s slice; offset uniform over the valid range,
/// deterministic given the rng state.
Window sample_window(const wfdb::SignalRecord& record, const WindowConfig& cfg, Rng& rng);
Window window_at(const wfdb::SignalRecord& record, const WindowConfig& cfg, std::size_t offset);
std::size_t max_offset(const wfdb::SignalRecord& record, const WindowConfig& cfg);

/// Per-channel linear interpolation onto target_length equispaced points
/// including both endpoints.
Window downsample(const Window& w, std::size_t target_length);

/// In-place radix-2 FFT, n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false);

/// Zero-pad to n_fft, FFT per channel, magnitudes of the non-redundant bins.
Window fft_features(const Window& w, const FftConfig& cfg);

/// Flat binary tensor dump: rank then dims as little-endian u64, then
/// raw doubles.
void dump_tensor(const std::string& path, const std::vector<std::size_t>& dims,
                 const std::vector<double>& data);

}  // namespace ecgforge::windowing
