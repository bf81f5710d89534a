#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ecgforge/windowing.hpp"

using namespace ecgforge;
using windowing::Window;

namespace {

// quadratic-time reference DFT, written independently of the fft
std::vector<std::complex<double>> dft_reference(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                         static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

Window make_window(std::size_t len, std::size_t ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Window w;
  w.length = len;
  w.channels = ch;
  w.data.resize(len * ch);
  for (auto& v : w.data) v = d(rng);
  return w;
}

wfdb::SignalRecord make_record(std::size_t n, double fs, std::size_t c) {
  wfdb::SignalRecord rec;
  rec.header.record_name = "t";
  rec.header.num_signals = c;
  rec.header.sampling_rate = fs;
  rec.header.num_samples = n;
  rec.header.signals.resize(c);
  rec.samples.resize(n * c);
  for (std::size_t i = 0; i < n * c; ++i) rec.samples[i] = static_cast<double>(i);
  return rec;
}

}  // namespace

TEST_CASE("fft sizes for 192-sample windows") {
  windowing::FftConfig cfg;
  cfg.d = 192;
  CHECK(cfg.n_fft() == 256);
  CHECK(cfg.n_components() == 129);
  cfg.d = 256;
  CHECK(cfg.n_fft() == 256);
  cfg.d = 257;
  CHECK(cfg.n_fft() == 512);
}

TEST_CASE("fft matches quadratic DFT oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d(0.0, 1.0);
  for (std::size_t n : {2u, 8u, 64u, 256u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {d(rng), d(rng)};
    auto want = dft_reference(x);
    auto got = x;
    windowing::fft_radix2(got);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err < 1e-9);
  }
}

TEST_CASE("fft inverse round-trips") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::complex<double>> x(128);
  for (auto& v : x) v = {d(rng), d(rng)};
  auto y = x;
  windowing::fft_radix2(y);
  windowing::fft_radix2(y, true);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-10);
}

TEST_CASE("Parseval's identity") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d(0.0, 1.0);
  const std::size_t n = 256;
  std::vector<std::complex<double>> x(n);
  double time_energy = 0.0;
  for (auto& v : x) {
    v = {d(rng), 0.0};
    time_energy += std::norm(v);
  }
  auto y = x;
  windowing::fft_radix2(y);
  double freq_energy = 0.0;
  for (const auto& v : y) freq_energy += std::norm(v);
  freq_energy /= static_cast<double>(n);
  CHECK(std::fabs(freq_energy - time_energy) / time_energy < 1e-9);
}

TEST_CASE("fft rejects non-power-of-two lengths") {
  std::vector<std::complex<double>> x(100);
  CHECK_THROWS_AS(windowing::fft_radix2(x), ShapeError);
}

TEST_CASE("downsample against direct interpolation oracle") {
  auto w = make_window(4000, 3, 2);
  const std::size_t T = 192;
  auto out = windowing::downsample(w, T);
  CHECK(out.length == T);
  CHECK(out.channels == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    // endpoints are taken verbatim
    CHECK(out.at(0, c) == doctest::Approx(w.at(0, c)).epsilon(1e-12));
    CHECK(out.at(T - 1, c) == doctest::Approx(w.at(w.length - 1, c)).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < T; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(w.length - 1) /
                       static_cast<double>(T - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < 3; ++c) {
      const double want = frac == 0.0 ? w.at(lo, c)
                                      : (1.0 - frac) * w.at(lo, c) + frac * w.at(lo + 1, c);
      CHECK(std::fabs(out.at(i, c) - want) < 1e-12);
    }
  }
}

TEST_CASE("downsample preserves linear ramps exactly") {
  Window w;
  w.length = 1000;
  w.channels = 1;
  w.data.resize(1000);
  for (std::size_t i = 0; i < 1000; ++i) w.data[i] = 0.5 * static_cast<double>(i) - 3.0;
  auto out = windowing::downsample(w, 192);
  for (std::size_t i = 0; i < 192; ++i) {
    const double pos = static_cast<double>(i) * 999.0 / 191.0;
    CHECK(out.data[i] == doctest::Approx(0.5 * pos - 3.0).epsilon(1e-10));
  }
}

TEST_CASE("upsampling is rejected") {
  auto w = make_window(100, 1, 3);
  CHECK_THROWS_AS(windowing::downsample(w, 101), UpsampleNotSupported);
  CHECK_NOTHROW(windowing::downsample(w, 100));
}

TEST_CASE("window extraction range and shape") {
  auto rec = make_record(5000, 1000.0, 2);
  windowing::WindowConfig cfg;  // 4 s -> 4000 samples
  CHECK(windowing::max_offset(rec, cfg) == 1000);
  auto w = windowing::window_at(rec, cfg, 123);
  CHECK(w.length == 4000);
  CHECK(w.channels == 2);
  CHECK(w.at(0, 0) == rec.at(123, 0));
  CHECK(w.at(3999, 1) == rec.at(123 + 3999, 1));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto s = windowing::sample_window(rec, cfg, rng);
    CHECK(s.length == 4000);
  }
}

TEST_CASE("too-short records are rejected") {
  auto rec = make_record(3999, 1000.0, 1);
  windowing::WindowConfig cfg;
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(windowing::sample_window(rec, cfg, rng), RecordTooShortError);
  auto exact = make_record(4000, 1000.0, 1);
  CHECK(windowing::max_offset(exact, cfg) == 0);
  CHECK_NOTHROW(windowing::sample_window(exact, cfg, rng));
}

TEST_CASE("fft_features shape and content") {
  auto w = make_window(192, 2, 9);
  windowing::FftConfig cfg;
  auto f = windowing::fft_features(w, cfg);
  CHECK(f.length == 129);
  CHECK(f.channels == 2);
  // channel 0 against the oracle with explicit zero-padding
  std::vector<std::complex<double>> x(256, {0.0, 0.0});
  for (std::size_t i = 0; i < 192; ++i) x[i] = {w.at(i, 0), 0.0};
  auto want = dft_reference(x);
  for (std::size_t k = 0; k < 129; ++k)
    CHECK(f.at(k, 0) == doctest::Approx(std::abs(want[k])).epsilon(1e-9));
}

TEST_CASE("fft_features rejects non-finite input") {
  auto w = make_window(192, 1, 1);
  w.data[5] = std::nan("");
  windowing::FftConfig cfg;
  CHECK_THROWS_AS(windowing::fft_features(w, cfg), NumericError);
}
