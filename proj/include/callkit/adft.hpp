// callkit/adft.hpp
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

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "callkit/signal.hpp"
#include "callkit/spectrogram.hpp"

namespace callkit {

/// Per-sample fundamental-frequency curve. Values stay inside
/// [f_min, f_max] and respect the slew limit used when the track was built.
struct F0Track {
  Eigen::ArrayXd f0;  // Hz, one value per signal sample
  double f_min = 0.0;
  double f_max = 0.0;
};

/// Pitch-adaptive spectrogram: one analysis instant per local period,
/// complex coefficients for harmonics k = 1..K_i where K_i keeps
/// k * f0 below Nyquist. Frame spacing is irregular by construction.
struct HarmonicSpectrogram {
  std::vector<double> frame_times;              // sample index of each instant
  std::vector<Eigen::VectorXcd> coefficients;   // per frame, k = 1..K_i
  std::vector<Eigen::VectorXd> harmonic_freqs;  // per frame, k * f0(t_i) in Hz
  std::vector<bool> truncated;                  // window clipped at an edge
  int sample_rate = 0;

  std::size_t n_frames() const { return frame_times.size(); }
};

/// Autocorrelation-candidate F0 estimation smoothed by a minimum-cost path
/// (octave jumps penalized), then interpolated to per-sample resolution and
/// slew-limited. Throws ErrorCode::unvoiced_signal when no frame has a
/// periodicity candidate above the voicing threshold.
F0Track estimate_f0_track(const Signal& signal, double f_min = 80.0,
                          double f_max = 2000.0,
                          double slew_hz_per_ms = 20.0);

/// Halves every track value and the voiced range, exposing sub- and
/// inter-harmonics to the adaptive basis.
F0Track halve_f0(const F0Track& track);

/// Adaptive DFT: demodulates the signal against e^{-j k phi(n)} where
/// phi is the accumulated phase of the track, over a Hann window of
/// window_periods local periods centered on each analysis instant.
/// Coefficients are normalized by the window sum (a sine of amplitude A
/// reads |c| ~ A/2, matching stft_magnitude).
HarmonicSpectrogram adft_spectrogram(const Signal& signal, const F0Track& track,
                                     double window_periods = 3.0);

/// Iterative refinement: per-harmonic frequency mismatch is read from the
/// phase slope of the demodulated harmonic, corrections are amplitude^2
/// weighted, and an iteration is only kept if the captured harmonic energy
/// does not decrease. Stops at max_iters or when every correction < tol_hz.
F0Track refine_f0(const Signal& signal, const F0Track& track, int max_iters = 8,
                  double tol_hz = 0.1);

/// Nearest-neighbour resampling of the irregular harmonic set onto the
/// regular grid of `template_spec` (the STFT of the same signal). Pixels
/// farther than f0/2 from every harmonic are set to 0.
Spectrogram regrid(const HarmonicSpectrogram& hspec,
                   const Spectrogram& template_spec);

/// CSV rows t_i, k, freq_hz, magnitude for the irregular harmonic set.
void write_harmonics_csv(const std::string& path,
                         const HarmonicSpectrogram& hspec);

}  // namespace callkit
