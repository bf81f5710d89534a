#include "ecgforge/windowing.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace ecgforge::windowing {

std::size_t FftConfig::n_fft() const {
  std::size_t n = 1;
  while (n < d) n <<= 1;
  return n;
}

std::size_t FftConfig::n_components() const { return n_fft() / 2 + 1; }

std::size_t max_offset(const wfdb::SignalRecord& record, const WindowConfig& cfg) {
  const auto win = static_cast<std::size_t>(
      std::llround(cfg.window_seconds * record.header.sampling_rate));
  if (record.header.num_samples < win)
    throw RecordTooShortError("record " + record.header.record_name + " shorter than window");
  return record.header.num_samples - win;
}

Window window_at(const wfdb::SignalRecord& record, const WindowConfig& cfg, std::size_t offset) {
  const auto win = static_cast<std::size_t>(
      std::llround(cfg.window_seconds * record.header.sampling_rate));
  if (offset > max_offset(record, cfg))
    throw RecordTooShortError("window offset out of range");
  Window w;
  w.length = win;
  w.channels = record.header.num_signals;
  w.data.assign(record.samples.begin() + static_cast<std::ptrdiff_t>(offset * w.channels),
                record.samples.begin() + static_cast<std::ptrdiff_t>((offset + win) * w.channels));
  return w;
}

Window sample_window(const wfdb::SignalRecord& record, const WindowConfig& cfg, Rng& rng) {
  const std::size_t hi = max_offset(record, cfg);
  std::uniform_int_distribution<std::size_t> dist(0, hi);
  return window_at(record, cfg, dist(rng));
}

Window downsample(const Window& w, std::size_t target_length) {
  if (target_length < 2) throw ConfigError("downsample: target_length must be >= 2");
  if (target_length > w.length)
    throw UpsampleNotSupported("downsample: target longer than source");
  Window out;
  out.length = target_length;
  out.channels = w.channels;
  out.data.resize(target_length * w.channels);
  for (std::size_t i = 0; i < target_length; ++i) {
    const double pos = static_cast<double>(i * (w.length - 1)) /
                       static_cast<double>(target_length - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= w.length - 1) lo = w.length - 2;
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < w.channels; ++c)
      out.data[i * w.channels + c] =
          (1.0 - frac) * w.at(lo, c) + frac * w.at(lo + 1, c);
  }
  return out;
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ShapeError("fft: length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

Window fft_features(const Window& w, const FftConfig& cfg) {
  if (w.length != cfg.d) throw ShapeError("fft_features: window length != configured d");
  for (double v : w.data)
    if (!std::isfinite(v)) throw NumericError("fft_features: non-finite input");
  const std::size_t nfft = cfg.n_fft();
  const std::size_t nc = cfg.n_components();
  Window out;
  out.length = nc;
  out.channels = w.channels;
  out.data.resize(nc * w.channels);
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t c = 0; c < w.channels; ++c) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t t = 0; t < w.length; ++t) buf[t] = w.at(t, c);
    fft_radix2(buf);
    for (std::size_t k = 0; k < nc; ++k) out.data[k * w.channels + c] = std::abs(buf[k]);
  }
  return out;
}

void dump_tensor(const std::string& path, const std::vector<std::size_t>& dims,
                 const std::vector<double>& data) {
  std::ofstream f(path, std::ios::binary);
  auto put_u64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 8);
  };
  put_u64(dims.size());
  for (auto d : dims) put_u64(d);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
}

}  // namespace ecgforge::windowing
