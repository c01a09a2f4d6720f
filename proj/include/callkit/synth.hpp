// callkit/synth.hpp
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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "callkit/signal.hpp"

namespace callkit {

struct Formant {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  double gain = 1.0;
};

/// Generative parameters of one individual: a downward f0 sweep, a
/// per-harmonic source amplitude pattern, a resonator cascade standing in
/// for the vocal tract / channel, and optionally a second harmonic stack
/// at an incommensurate ratio (two-voice).
struct IndividualProfile {
  double f0_start_hz = 1000.0;
  double f0_end_hz = 700.0;
  Eigen::VectorXd harmonic_amps;  // linear, relative to harmonic 1
  std::vector<Formant> formants;
  double spectral_tilt = 0.0;  // one-zero coefficient in (-1, 1)
  double duration_mean_s = 0.272;
  double duration_sd_s = 0.047;
  double two_voice_ratio = 0.0;  // 0 disables the second stack
  double two_voice_level = 0.0;
  double noise_floor_db = -60.0;  // relative to harmonic RMS; -inf disables
};

struct SynthCorpus {
  std::vector<LabelledCall> calls;
  std::map<std::string, IndividualProfile> profiles;
  std::uint64_t master_seed = 0;
};

/// Deterministic call synthesis: swept harmonic stack with random phases,
/// resonator cascade, additive noise, 10 ms attack / 30 ms release
/// envelope, peak-normalized to 0.9.
Signal generate_call(const IndividualProfile& profile, std::uint64_t seed,
                     int sample_rate = 48000);

struct CorpusOptions {
  int n_individuals = 20;
  int calls_each = 30;
  std::uint64_t master_seed = 1;
  // Identity switches: a disabled trait is redrawn per call, so it carries
  // no individual information (e.g. identity_in_formants=false gives every
  // call a fresh random channel).
  bool identity_in_f0 = true;
  bool identity_in_source = true;
  bool identity_in_formants = true;
  double identity_scale = 1.0;  // between-individual spread multiplier
  double within_jitter = 1.0;   // within-individual jitter multiplier
  double two_voice_fraction = 0.0;
  double noise_floor_db = -50.0;
  int sample_rate = 48000;
  // Optional unbalanced class sizes; overrides calls_each and
  // n_individuals when non-empty.
  std::vector<int> class_counts;
};

/// Labelled corpus with per-call seeds derived from (master_seed,
/// individual, call index); regeneration is bit-identical.
SynthCorpus generate_corpus(const CorpusOptions& options);

/// Writes <call_id>.wav files, labels.csv and profiles.json into dir.
void write_corpus(const std::string& dir, const SynthCorpus& corpus);

}  // namespace callkit
