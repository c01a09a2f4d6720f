// tests/test_adft.cpp
//
// Copyright 2026 The callkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "doctest.h"

#include "callkit/adft.hpp"
#include "callkit/errors.hpp"
#include "callkit/rng.hpp"
#include "callkit/spectrogram.hpp"

using namespace callkit;

namespace {

constexpr double kPi = 3.14159265358979323846;

Signal sine_signal(double freq, double seconds, int fs = 48000) {
  Signal s;
  s.sample_rate = fs;
  s.samples.resize(static_cast<Eigen::Index>(seconds * fs));
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s.samples[i] = std::sin(2.0 * kPi * freq * i / fs);
  return s;
}

/// Harmonic stack with a linear f0 sweep; returns the true per-sample f0.
Signal swept_harmonics(double f0_start, double f0_end, double seconds,
                       const std::vector<double>& amps, int fs,
                       Eigen::ArrayXd* true_f0 = nullptr,
                       std::uint64_t phase_seed = 0) {
  Rng rng(phase_seed);
  Signal s;
  s.sample_rate = fs;
  const Eigen::Index n = static_cast<Eigen::Index>(seconds * fs);
  s.samples = Eigen::ArrayXd::Zero(n);
  if (true_f0) true_f0->resize(n);
  std::vector<double> thetas(amps.size());
  for (auto& theta : thetas) theta = phase_seed ? rng.uniform(0.0, 2.0 * kPi) : 0.0;
  double phi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    const double f0 = f0_start + t * (f0_end - f0_start);
    if (true_f0) (*true_f0)[i] = f0;
    for (std::size_t k = 0; k < amps.size(); ++k)
      s.samples[i] += amps[k] * std::sin((k + 1) * phi + thetas[k]);
    phi += 2.0 * kPi * f0 / fs;
  }
  return s;
}

F0Track constant_track(double f0, Eigen::Index n, double f_min, double f_max) {
  F0Track track;
  track.f0 = Eigen::ArrayXd::Constant(n, f0);
  track.f_min = f_min;
  track.f_max = f_max;
  return track;
}

/// Fraction of total spectrogram energy within +/-1 bin of the harmonic
/// frequencies predicted by the true f0 contour.
double harmonic_concentration(const Spectrogram& spec,
                              const Eigen::ArrayXd& true_f0) {
  const double bin_hz =
      static_cast<double>(spec.sample_rate) / static_cast<double>(spec.frame_size);
  double harmonic_energy = 0.0;
  double total = 0.0;
  for (Eigen::Index f = 0; f < spec.n_frames(); ++f) {
    const Eigen::Index center =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(spec.frame_center(f)),
                               true_f0.size() - 1);
    const double f0 = true_f0[center];
    for (Eigen::Index b = 0; b < spec.n_bins(); ++b) {
      const double energy =
          static_cast<double>(spec.values(f, b)) * spec.values(f, b);
      total += energy;
      const double freq = spec.bin_frequency(b);
      const double nearest = std::max(1.0, std::round(freq / f0)) * f0;
      if (std::abs(freq - nearest) <= bin_hz) harmonic_energy += energy;
    }
  }
  return total > 0.0 ? harmonic_energy / total : 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("adft");

TEST_CASE("pure 500 Hz sine tracks within 2 Hz everywhere") {
  const Signal s = sine_signal(500.0, 0.5);
  const F0Track track = estimate_f0_track(s);
  CHECK(track.f0.size() == s.size());
  CHECK((track.f0 - 500.0).abs().maxCoeff() < 2.0);
}

TEST_CASE("linear chirp 1000->700 Hz tracks within 3 percent") {
  Eigen::ArrayXd true_f0;
  const Signal s = swept_harmonics(1000.0, 700.0, 0.3, {1.0}, 48000, &true_f0);
  const F0Track track = estimate_f0_track(s);
  const double worst = ((track.f0 - true_f0).abs() / true_f0).maxCoeff();
  CHECK(worst < 0.03);
}

TEST_CASE("all-silent signal is unvoiced") {
  Signal s;
  s.sample_rate = 48000;
  s.samples = Eigen::ArrayXd::Zero(48000 / 2);
  try {
    estimate_f0_track(s);
    FAIL("silence must raise");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unvoiced_signal);
  }
}

TEST_CASE("track respects the slew limit") {
  Eigen::ArrayXd true_f0;
  const Signal s = swept_harmonics(1400.0, 500.0, 0.25, {1.0, 0.4}, 48000, &true_f0);
  const F0Track track = estimate_f0_track(s);
  const double limit = 20.0 * 1000.0 / 48000.0 + 1e-9;
  for (Eigen::Index i = 1; i < track.f0.size(); ++i)
    CHECK(std::abs(track.f0[i] - track.f0[i - 1]) <= limit);
}

TEST_CASE("halve_f0 scales pointwise") {
  F0Track track = constant_track(800.0, 100, 80.0, 2000.0);
  const F0Track halved = halve_f0(track);
  CHECK((halved.f0 == 400.0).all());
  CHECK(halved.f_min == doctest::Approx(40.0));
  CHECK(halved.f_max == doctest::Approx(1000.0));

  Eigen::ArrayXd true_f0;
  swept_harmonics(1000.0, 700.0, 0.1, {1.0}, 48000, &true_f0);
  F0Track chirp;
  chirp.f0 = true_f0;
  chirp.f_min = 80.0;
  chirp.f_max = 2000.0;
  const F0Track half = halve_f0(chirp);
  CHECK(half.f0[0] == doctest::Approx(500.0));
  CHECK(half.f0[half.f0.size() - 1] == doctest::Approx(350.0));
}

TEST_CASE("halving the track roughly doubles the harmonic count") {
  const int fs = 48000;
  const Signal s = sine_signal(440.0, 0.2, fs);
  const F0Track track = constant_track(440.0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram full = adft_spectrogram(s, track);
  const HarmonicSpectrogram halved = adft_spectrogram(s, halve_f0(track));
  const Eigen::Index k_full = full.coefficients[1].size();
  const Eigen::Index k_half = halved.coefficients[1].size();
  CHECK(k_half >= 2 * k_full);
  CHECK(k_half <= 2 * k_full + 1);
}

TEST_CASE("stationary harmonic amplitudes recovered within 2 percent") {
  const int fs = 48000;
  const std::vector<double> amps = {1.0, 0.5, 0.25, 0.125, 0.0625};
  Eigen::ArrayXd true_f0;
  const Signal s = swept_harmonics(440.0, 440.0, 0.4, amps, fs, &true_f0, 77);
  const F0Track track = constant_track(440.0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);

  // Interior frames only; edge windows are truncated.
  int checked = 0;
  for (std::size_t f = 0; f < hspec.n_frames(); ++f) {
    if (hspec.truncated[f]) continue;
    for (std::size_t k = 0; k < amps.size(); ++k) {
      const double recovered = 2.0 * std::abs(hspec.coefficients[f][static_cast<Eigen::Index>(k)]);
      CHECK(recovered == doctest::Approx(amps[k]).epsilon(0.02));
    }
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("all-zero signal has all-zero coefficients") {
  Signal s;
  s.sample_rate = 48000;
  s.samples = Eigen::ArrayXd::Zero(24000);
  const F0Track track = constant_track(400.0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);
  for (const auto& coeffs : hspec.coefficients)
    CHECK(coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("edge frames are flagged truncated, not dropped") {
  const Signal s = sine_signal(400.0, 0.2);
  const F0Track track = constant_track(400.0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);
  REQUIRE(hspec.n_frames() > 4);
  CHECK(hspec.truncated.front());
  CHECK_FALSE(hspec.truncated[hspec.n_frames() / 2]);
}

TEST_CASE("constant bin-centered f0 degenerates to the DFT") {
  // f0 on an exact bin center: aDFT harmonic magnitudes match the STFT.
  const int fs = 48000;
  const double f0 = 10.0 * fs / 1024.0;  // 468.75 Hz, bin 10
  const std::vector<double> amps = {1.0, 0.5, 0.25};
  Eigen::ArrayXd true_f0;
  const Signal s = swept_harmonics(f0, f0, 0.4, amps, fs, &true_f0, 99);
  const Spectrogram stft = stft_magnitude(s);
  const F0Track track = constant_track(f0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);

  const Eigen::Index mid_frame = stft.n_frames() / 2;
  const double mid_time = stft.frame_center(mid_frame);
  std::size_t nearest = 0;
  for (std::size_t f = 0; f < hspec.n_frames(); ++f)
    if (std::abs(hspec.frame_times[f] - mid_time) <
        std::abs(hspec.frame_times[nearest] - mid_time))
      nearest = f;

  for (std::size_t k = 0; k < amps.size(); ++k) {
    const double adft_mag =
        std::abs(hspec.coefficients[nearest][static_cast<Eigen::Index>(k)]);
    const double stft_mag = stft.values(mid_frame, static_cast<Eigen::Index>(10 * (k + 1)));
    CHECK(adft_mag == doctest::Approx(stft_mag).epsilon(0.05));
  }
}

TEST_CASE("chirped harmonics: aDFT concentrates more energy than the STFT") {
  const int fs = 48000;
  const std::vector<double> amps = {1.0, 0.7, 0.5, 0.35, 0.25, 0.18};
  Eigen::ArrayXd true_f0;
  const Signal s = swept_harmonics(1000.0, 700.0, 0.3, amps, fs, &true_f0, 123);
  const Spectrogram stft = stft_magnitude(s);

  F0Track track = estimate_f0_track(s);
  track = halve_f0(track);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);
  const Spectrogram gridded = regrid(hspec, stft);

  const double adft_ratio = harmonic_concentration(gridded, true_f0);
  const double stft_ratio = harmonic_concentration(stft, true_f0);
  CHECK(adft_ratio > stft_ratio);
}

TEST_CASE("refine_f0 is a fixed point on an exact track") {
  const std::vector<double> amps = {1.0, 0.5, 0.25};
  const Signal s = swept_harmonics(440.0, 440.0, 0.3, amps, 48000, nullptr, 7);
  const F0Track track = constant_track(440.0, s.size(), 80.0, 2000.0);
  const F0Track refined = refine_f0(s, track, 8, 0.1);
  CHECK((refined.f0 - track.f0).abs().maxCoeff() <= 0.1);
}

TEST_CASE("refine_f0 recovers a 5 percent bias to within 1 Hz") {
  const std::vector<double> amps = {1.0, 0.5, 0.25, 0.125, 0.0625};
  const Signal s = swept_harmonics(440.0, 440.0, 0.4, amps, 48000, nullptr, 13);
  const F0Track biased = constant_track(440.0 * 1.05, s.size(), 80.0, 2000.0);
  const F0Track refined = refine_f0(s, biased, 8, 0.1);
  const Eigen::Index margin = s.size() / 10;  // ignore edge extrapolation
  const auto interior = refined.f0.segment(margin, s.size() - 2 * margin);
  CHECK((interior - 440.0).abs().maxCoeff() < 1.0);
}

TEST_CASE("refine_f0 is idempotent at its fixed point") {
  const std::vector<double> amps = {1.0, 0.5, 0.25};
  const Signal s = swept_harmonics(500.0, 480.0, 0.3, amps, 48000, nullptr, 21);
  const F0Track biased = constant_track(510.0, s.size(), 80.0, 2000.0);
  const F0Track once = refine_f0(s, biased, 8, 0.1);
  const F0Track twice = refine_f0(s, once, 8, 0.1);
  CHECK((twice.f0 - once.f0).abs().maxCoeff() <= 0.1 + 1e-9);
}

TEST_CASE("refinement never leaves the voiced range") {
  Rng rng(31);
  const std::vector<double> amps = {1.0, 0.6, 0.3};
  for (int trial = 0; trial < 5; ++trial) {
    const double f0 = rng.uniform(300.0, 600.0);
    const Signal s = swept_harmonics(f0, f0 * 0.9, 0.25, amps, 48000, nullptr,
                                     100 + static_cast<std::uint64_t>(trial));
    F0Track track = estimate_f0_track(s);
    track = halve_f0(track);
    const F0Track refined = refine_f0(s, track, 8, 0.1);
    CHECK(refined.f0.minCoeff() >= track.f_min - 1e-9);
    CHECK(refined.f0.maxCoeff() <= track.f_max + 1e-9);
  }
}

TEST_CASE("regrid places an exact hit on its pixel and zeros elsewhere") {
  Spectrogram tmpl;
  tmpl.values = Spectrogram::Matrix::Zero(4, 9);
  tmpl.frame_hop = 256;
  tmpl.frame_size = 16;  // bins every fs/16 = 3000 Hz
  tmpl.sample_rate = 48000;
  tmpl.time_origin = 8;

  HarmonicSpectrogram hspec;
  hspec.sample_rate = 48000;
  // One frame exactly at the center of template frame 2, one harmonic at
  // exactly bin 2 (6000 Hz).
  hspec.frame_times = {static_cast<double>(tmpl.time_origin + 2 * 256)};
  hspec.harmonic_freqs = {Eigen::VectorXd::Constant(1, 6000.0)};
  hspec.coefficients = {Eigen::VectorXcd::Constant(1, std::complex<double>(0.8, 0.0))};
  hspec.truncated = {false};

  const Spectrogram gridded = regrid(hspec, tmpl);
  CHECK(gridded.values(2, 2) == doctest::Approx(0.8));
  CHECK(gridded.values(2, 1) == 0.0f);
  CHECK(gridded.values(2, 3) == 0.0f);
  CHECK(gridded.values(1, 2) == doctest::Approx(0.8));  // nearest in time
}

TEST_CASE("constant f0 regrids to horizontal stripes at harmonics") {
  const int fs = 48000;
  const double f0 = 600.0;
  const std::vector<double> amps = {1.0, 0.8, 0.6, 0.4};
  const Signal s = swept_harmonics(f0, f0, 0.3, amps, fs, nullptr, 17);
  const Spectrogram tmpl = stft_magnitude(s);
  const F0Track track = constant_track(f0, s.size(), 80.0, 2000.0);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);
  const Spectrogram gridded = regrid(hspec, tmpl);

  const double bin_hz = static_cast<double>(fs) / 1024.0;
  for (Eigen::Index f = 1; f + 1 < gridded.n_frames(); ++f) {
    for (Eigen::Index b = 0; b < gridded.n_bins(); ++b) {
      const double freq = gridded.bin_frequency(b);
      const double nearest = std::max(1.0, std::round(freq / f0)) * f0;
      if (gridded.values(f, b) > 0.05f)
        CHECK(std::abs(freq - nearest) <= bin_hz);
    }
  }
}

TEST_CASE("regrid output matches the template dimensions") {
  Rng rng(3);
  Signal s;
  s.sample_rate = 48000;
  s.samples.resize(13056);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s.samples[i] = std::sin(2.0 * kPi * 700.0 * i / 48000.0) + 0.01 * rng.normal();
  const Spectrogram tmpl = stft_magnitude(s);
  REQUIRE(tmpl.n_frames() == 48);
  const F0Track track = constant_track(700.0, s.size(), 80.0, 2000.0);
  const Spectrogram gridded = regrid(adft_spectrogram(s, track), tmpl);
  CHECK(gridded.n_frames() == 48);
  CHECK(gridded.n_bins() == 513);
  CHECK(gridded.frame_hop == tmpl.frame_hop);
  CHECK(gridded.sample_rate == tmpl.sample_rate);
}

TEST_CASE("regrid is deterministic") {
  const std::vector<double> amps = {1.0, 0.5};
  const Signal s = swept_harmonics(800.0, 700.0, 0.2, amps, 48000, nullptr, 5);
  const Spectrogram tmpl = stft_magnitude(s);
  const F0Track track = estimate_f0_track(s);
  const HarmonicSpectrogram hspec = adft_spectrogram(s, track);
  const Spectrogram a = regrid(hspec, tmpl);
  const Spectrogram b = regrid(hspec, tmpl);
  CHECK(a.values.cwiseEqual(b.values).all());
}

TEST_CASE("empty harmonic set cannot be regridded") {
  Spectrogram tmpl;
  tmpl.values = Spectrogram::Matrix::Zero(2, 4);
  tmpl.frame_hop = 256;
  tmpl.frame_size = 8;
  tmpl.sample_rate = 48000;
  HarmonicSpectrogram empty;
  CHECK_THROWS_AS(regrid(empty, tmpl), Error);
}

TEST_SUITE_END();
