// tests/test_spectrogram.cpp
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
#include <filesystem>

#include "doctest.h"

#include "callkit/errors.hpp"
#include "callkit/rng.hpp"
#include "callkit/spectrogram.hpp"

using namespace callkit;

namespace {

constexpr double kPi = 3.14159265358979323846;

Signal sine_signal(double freq, double seconds, int fs = 48000,
                   double amplitude = 1.0) {
  Signal s;
  s.sample_rate = fs;
  s.samples.resize(static_cast<Eigen::Index>(seconds * fs));
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s.samples[i] = amplitude * std::sin(2.0 * kPi * freq * i / fs);
  return s;
}

Signal noise_signal(Eigen::Index n, std::uint64_t seed, int fs = 48000) {
  Rng rng(seed);
  Signal s;
  s.sample_rate = fs;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("spectrogram");

TEST_CASE("bin-centered sine dominates its column") {
  const int fs = 48000;
  const Eigen::Index k = 40;  // 1875 Hz
  const double freq = static_cast<double>(k) * fs / 1024.0;
  const Spectrogram spec = stft_magnitude(sine_signal(freq, 0.2, fs));
  REQUIRE(spec.n_bins() == 513);
  for (Eigen::Index f = 0; f < spec.n_frames(); ++f) {
    float off_peak = 0.0f;
    for (Eigen::Index b = 0; b < spec.n_bins(); ++b)
      if (std::abs(b - k) >= 2) off_peak = std::max(off_peak, spec.values(f, b));
    CHECK(spec.values(f, k) >= 100.0f * off_peak);
    // Window-sum normalization puts a unit sine at ~0.5.
    CHECK(spec.values(f, k) == doctest::Approx(0.5).epsilon(0.01));
  }
}

TEST_CASE("all-zero signal gives an all-zero spectrogram") {
  Signal s;
  s.sample_rate = 48000;
  s.samples = Eigen::ArrayXd::Zero(4096);
  const Spectrogram spec = stft_magnitude(s);
  CHECK(spec.values.maxCoeff() == 0.0f);
}

TEST_CASE("median-duration call framing: 13056 samples -> 48 x 513") {
  Signal s = noise_signal(13056, 1);
  const Spectrogram spec = stft_magnitude(s);
  CHECK(spec.n_frames() == 48);
  CHECK(spec.n_bins() == 513);
  CHECK(spec.frame_hop == 256);
  CHECK(spec.time_origin == 512);
}

TEST_CASE("signal shorter than one frame is rejected") {
  Signal s = noise_signal(512, 2);
  CHECK_THROWS_AS(stft_magnitude(s, 1024, 0.75), Error);
}

TEST_CASE("Parseval: windowed frame energy tracks the bin energies") {
  const Signal s = noise_signal(8192, 3);
  const Eigen::Index n = 1024, hop = 256;
  const Spectrogram spec = stft_magnitude(s, n, 0.75);
  const Eigen::ArrayXd window = detail::hann_window(n);
  const double wsum = window.sum();

  for (Eigen::Index f = 0; f < spec.n_frames(); ++f) {
    const Eigen::ArrayXd frame = s.samples.segment(f * hop, n) * window;
    const double energy = frame.square().sum();
    double bins = 0.0;
    for (Eigen::Index b = 0; b < spec.n_bins(); ++b) {
      const double mag = static_cast<double>(spec.values(f, b)) * wsum;
      const double weight = (b == 0 || b == n / 2) ? 1.0 : 2.0;
      bins += weight * mag * mag;
    }
    CHECK(bins / n == doctest::Approx(energy).epsilon(1e-6));
  }
}

TEST_CASE("hop-aligned time shift slides frames bit-exactly") {
  const Signal s = noise_signal(6144, 4);
  Signal shifted;
  shifted.sample_rate = s.sample_rate;
  shifted.samples = Eigen::ArrayXd::Zero(s.size() + 256);
  shifted.samples.tail(s.size()) = s.samples;

  const Spectrogram a = stft_magnitude(s);
  const Spectrogram b = stft_magnitude(shifted);
  REQUIRE(b.n_frames() == a.n_frames() + 1);
  for (Eigen::Index f = 0; f < a.n_frames(); ++f)
    CHECK(a.values.row(f).cwiseEqual(b.values.row(f + 1)).all());
}

TEST_CASE("log_magnitude maps a decade to -20 dB against the per-call max") {
  Spectrogram spec;
  spec.values.resize(1, 2);
  spec.values << 1.0f, 0.1f;
  spec.sample_rate = 48000;
  spec.frame_size = 2;
  spec.frame_hop = 1;
  const Spectrogram logged = log_magnitude(spec);
  CHECK(logged.is_log);
  CHECK(logged.values(0, 0) == doctest::Approx(0.0));
  CHECK(logged.values(0, 1) == doctest::Approx(-20.0));
}

TEST_CASE("log_magnitude floors exactly") {
  Spectrogram spec;
  spec.values.resize(1, 2);
  spec.values << 1.0f, 1e-9f;
  spec.frame_size = 2;
  spec.frame_hop = 1;
  const Spectrogram logged = log_magnitude(spec, -80.0);
  CHECK(logged.values(0, 1) == -80.0f);
}

TEST_CASE("all-zero spectrogram logs to a uniform floor") {
  Spectrogram spec;
  spec.values = Spectrogram::Matrix::Zero(3, 4);
  spec.frame_size = 6;
  spec.frame_hop = 2;
  const Spectrogram logged = log_magnitude(spec, -80.0);
  CHECK((logged.values.array() == -80.0f).all());
}

TEST_CASE("double log is rejected") {
  Spectrogram spec;
  spec.values = Spectrogram::Matrix::Ones(2, 2);
  spec.frame_size = 2;
  spec.frame_hop = 1;
  const Spectrogram logged = log_magnitude(spec);
  CHECK_THROWS_AS(log_magnitude(logged), Error);
}

TEST_CASE("log_magnitude is monotone per pixel") {
  Rng rng(5);
  Spectrogram spec;
  spec.values.resize(4, 8);
  for (Eigen::Index f = 0; f < 4; ++f)
    for (Eigen::Index b = 0; b < 8; ++b)
      spec.values(f, b) = static_cast<float>(rng.uniform(0.0, 2.0));
  spec.frame_size = 14;
  spec.frame_hop = 7;
  const Spectrogram logged = log_magnitude(spec, -120.0);
  const Eigen::Index count = spec.values.size();
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < count; ++j)
      if (spec.values(i / 8, i % 8) <= spec.values(j / 8, j % 8))
        CHECK(logged.values(i / 8, i % 8) <= logged.values(j / 8, j % 8));
}

TEST_CASE("binary container round-trips exactly") {
  const Signal s = noise_signal(4096, 6);
  const Spectrogram spec = stft_magnitude(s);
  const std::string path =
      (std::filesystem::temp_directory_path() / "ck_spec.bin").string();
  write_spectrogram_binary(path, spec);
  const Spectrogram loaded = read_spectrogram_binary(path);
  CHECK(loaded.n_frames() == spec.n_frames());
  CHECK(loaded.n_bins() == spec.n_bins());
  CHECK(loaded.frame_hop == spec.frame_hop);
  CHECK(loaded.frame_size == spec.frame_size);
  CHECK(loaded.values.cwiseEqual(spec.values).all());
}

TEST_CASE("tiled spectrogram repeats the spectrum across frames") {
  Eigen::VectorXd spectrum(3);
  spectrum << 1.0, 2.0, 3.0;
  const Spectrogram spec = tiled_spectrogram(spectrum, 5, 256, 1024, 48000);
  CHECK(spec.n_frames() == 5);
  CHECK(spec.n_bins() == 3);
  for (Eigen::Index f = 0; f < 5; ++f) {
    CHECK(spec.values(f, 0) == 1.0f);
    CHECK(spec.values(f, 2) == 3.0f);
  }
}

TEST_SUITE_END();
