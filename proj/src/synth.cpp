// callkit/synth.cpp
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

#include "callkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "callkit/errors.hpp"
#include "callkit/rng.hpp"

namespace callkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Unity-peak two-pole resonator applied in place.
void apply_resonator(Eigen::ArrayXd& x, const Formant& formant, int fs) {
  const double theta = 2.0 * kPi * formant.center_hz / fs;
  const double r = std::exp(-kPi * formant.bandwidth_hz / fs);
  const double a1 = 2.0 * r * std::cos(theta);
  const double a2 = -r * r;
  // Peak response of 1 / (1 - a1 z^-1 + r^2 z^-2) at the pole angle.
  const std::complex<double> z(std::cos(theta), std::sin(theta));
  const std::complex<double> denom =
      1.0 - a1 / z + (r * r) / (z * z);
  const double b0 = formant.gain * std::abs(denom);

  double y1 = 0.0, y2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double y = b0 * x[i] + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    x[i] = y;
  }
}

void apply_tilt(Eigen::ArrayXd& x, double coeff) {
  if (coeff == 0.0) return;
  double prev = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double cur = x[i];
    x[i] = cur - coeff * prev;
    prev = cur;
  }
}

Eigen::ArrayXd harmonic_stack(const Eigen::ArrayXd& phase,
                              const Eigen::VectorXd& amps, double max_f0,
                              int fs, Rng& rng) {
  const double nyquist_guard = 0.475 * fs;
  int n_harm = static_cast<int>(amps.size());
  while (n_harm > 1 && n_harm * max_f0 > nyquist_guard) --n_harm;

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(phase.size());
  for (int k = 1; k <= n_harm; ++k) {
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    out += amps[k - 1] * (k * phase + theta).sin();
  }
  return out;
}

}  // namespace

Signal generate_call(const IndividualProfile& profile, std::uint64_t seed,
                     int sample_rate) {
  if (profile.harmonic_amps.size() == 0)
    raise(ErrorCode::invalid_argument, "profile has no harmonic amplitudes");
  if (profile.f0_start_hz <= 0.0 || profile.f0_end_hz <= 0.0)
    raise(ErrorCode::invalid_argument, "profile f0 must be positive");

  Rng rng(seed);
  const double duration =
      std::clamp(rng.normal(profile.duration_mean_s, profile.duration_sd_s),
                 0.12, 0.60);
  const Eigen::Index n =
      static_cast<Eigen::Index>(std::lround(duration * sample_rate));

  // Linear f0 sweep and its accumulated phase.
  Eigen::ArrayXd phase(n);
  double phi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    const double f0 = profile.f0_start_hz +
                      t * (profile.f0_end_hz - profile.f0_start_hz);
    phase[i] = phi;
    phi += 2.0 * kPi * f0 / sample_rate;
  }

  const double max_f0 = std::max(profile.f0_start_hz, profile.f0_end_hz);
  Eigen::ArrayXd x =
      harmonic_stack(phase, profile.harmonic_amps, max_f0, sample_rate, rng);
  if (profile.two_voice_ratio > 0.0 && profile.two_voice_level > 0.0) {
    const Eigen::ArrayXd phase2 = phase * profile.two_voice_ratio;
    x += profile.two_voice_level *
         harmonic_stack(phase2, profile.harmonic_amps,
                        max_f0 * profile.two_voice_ratio, sample_rate, rng);
  }

  for (const Formant& formant : profile.formants)
    apply_resonator(x, formant, sample_rate);
  apply_tilt(x, profile.spectral_tilt);

  if (std::isfinite(profile.noise_floor_db)) {
    const double rms = std::sqrt(x.square().mean());
    const double sigma = rms * std::pow(10.0, profile.noise_floor_db / 20.0);
    for (Eigen::Index i = 0; i < n; ++i) x[i] += sigma * rng.normal();
  }

  // 10 ms raised-cosine attack, 30 ms release.
  const Eigen::Index attack =
      std::min<Eigen::Index>(n, static_cast<Eigen::Index>(0.010 * sample_rate));
  const Eigen::Index release =
      std::min<Eigen::Index>(n, static_cast<Eigen::Index>(0.030 * sample_rate));
  for (Eigen::Index i = 0; i < attack; ++i)
    x[i] *= 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / attack);
  for (Eigen::Index i = 0; i < release; ++i)
    x[n - 1 - i] *= 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / release);

  const double peak = x.abs().maxCoeff();
  if (peak > 0.0) x *= 0.9 / peak;

  Signal out;
  out.samples = std::move(x);
  out.sample_rate = sample_rate;
  out.onset_index = 0;
  return out;
}

namespace {

IndividualProfile draw_profile(Rng& rng, const CorpusOptions& options) {
  IndividualProfile profile;
  const double spread = options.identity_scale;

  profile.f0_start_hz = 950.0 + spread * rng.uniform(-150.0, 150.0);
  profile.f0_end_hz =
      profile.f0_start_hz - (300.0 + spread * rng.uniform(-100.0, 100.0));
  profile.f0_end_hz = std::max(profile.f0_end_hz, 250.0);

  const int n_harm = 24;
  profile.harmonic_amps.resize(n_harm);
  const double tilt_db = rng.uniform(-2.5, -1.0);
  for (int k = 0; k < n_harm; ++k) {
    const double signature_db = spread * rng.normal(0.0, 4.0);
    profile.harmonic_amps[k] =
        std::pow(10.0, (tilt_db * k + signature_db) / 20.0);
  }
  profile.harmonic_amps /= profile.harmonic_amps[0];

  profile.formants.clear();
  std::vector<double> centers = {rng.uniform(1200.0, 9000.0),
                                 rng.uniform(1200.0, 9000.0),
                                 rng.uniform(1200.0, 9000.0)};
  std::sort(centers.begin(), centers.end());
  for (double center : centers) {
    Formant formant;
    formant.center_hz = center;
    formant.bandwidth_hz = rng.uniform(400.0, 900.0);
    formant.gain = rng.uniform(0.8, 2.5);
    profile.formants.push_back(formant);
  }
  profile.spectral_tilt = rng.uniform(-0.6, 0.6);

  profile.duration_mean_s = rng.uniform(0.22, 0.34);
  profile.duration_sd_s = 0.035;
  profile.noise_floor_db = options.noise_floor_db;

  if (rng.uniform() < options.two_voice_fraction) {
    profile.two_voice_ratio = 1.0 + std::sqrt(2.0) / 10.0;
    profile.two_voice_level = 0.35;
  }
  return profile;
}

void jitter_profile(IndividualProfile& profile, Rng& rng,
                    const CorpusOptions& options) {
  const double jitter = options.within_jitter;
  profile.f0_start_hz *= 1.0 + jitter * rng.normal(0.0, 0.015);
  profile.f0_end_hz *= 1.0 + jitter * rng.normal(0.0, 0.015);
  for (Eigen::Index k = 0; k < profile.harmonic_amps.size(); ++k)
    profile.harmonic_amps[k] *=
        std::pow(10.0, jitter * rng.normal(0.0, 1.2) / 20.0);
  for (Formant& formant : profile.formants) {
    formant.center_hz *= 1.0 + jitter * rng.normal(0.0, 0.02);
    formant.gain *= 1.0 + jitter * rng.normal(0.0, 0.05);
  }
}

}  // namespace

SynthCorpus generate_corpus(const CorpusOptions& options) {
  int n_individuals = options.n_individuals;
  if (!options.class_counts.empty())
    n_individuals = static_cast<int>(options.class_counts.size());
  if (n_individuals < 2)
    raise(ErrorCode::invalid_argument, "need at least two individuals");

  SynthCorpus corpus;
  corpus.master_seed = options.master_seed;

  std::vector<IndividualProfile> profiles;
  for (int ind = 0; ind < n_individuals; ++ind) {
    Rng rng(derive_seed(options.master_seed, 0x1D, static_cast<std::uint64_t>(ind)));
    profiles.push_back(draw_profile(rng, options));
  }

  char name[32];
  for (int ind = 0; ind < n_individuals; ++ind) {
    std::snprintf(name, sizeof(name), "ind%02d", ind);
    const std::string individual_id = name;
    corpus.profiles[individual_id] = profiles[static_cast<std::size_t>(ind)];

    const int n_calls = options.class_counts.empty()
                            ? options.calls_each
                            : options.class_counts[static_cast<std::size_t>(ind)];
    for (int c = 0; c < n_calls; ++c) {
      Rng call_rng(derive_seed(options.master_seed,
                               0x100 + static_cast<std::uint64_t>(ind),
                               static_cast<std::uint64_t>(c)));
      IndividualProfile call_profile = profiles[static_cast<std::size_t>(ind)];
      // Traits not carrying identity are redrawn fresh for every call.
      if (!options.identity_in_f0 || !options.identity_in_source ||
          !options.identity_in_formants) {
        const IndividualProfile fresh = draw_profile(call_rng, options);
        if (!options.identity_in_f0) {
          call_profile.f0_start_hz = fresh.f0_start_hz;
          call_profile.f0_end_hz = fresh.f0_end_hz;
        }
        if (!options.identity_in_source)
          call_profile.harmonic_amps = fresh.harmonic_amps;
        if (!options.identity_in_formants) {
          call_profile.formants = fresh.formants;
          call_profile.spectral_tilt = fresh.spectral_tilt;
        }
      }
      jitter_profile(call_profile, call_rng, options);

      LabelledCall call;
      call.individual_id = individual_id;
      std::snprintf(name, sizeof(name), "%s_call%03d", individual_id.c_str(), c);
      call.call_id = name;
      call.signal = generate_call(
          call_profile,
          derive_seed(options.master_seed, 0x2000 + static_cast<std::uint64_t>(ind),
                      static_cast<std::uint64_t>(c)),
          options.sample_rate);
      corpus.calls.push_back(std::move(call));
    }
  }
  return corpus;
}

void write_corpus(const std::string& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);

  std::ofstream labels(base / "labels.csv", std::ios::trunc);
  if (!labels) raise(ErrorCode::io_error, "cannot write labels.csv");
  labels << "filename,individual_id\n";
  for (const auto& call : corpus.calls) {
    const std::string file = call.call_id + ".wav";
    save_wav((base / file).string(), call.signal, 16);
    labels << file << ',' << call.individual_id << '\n';
  }

  nlohmann::json j;
  j["master_seed"] = corpus.master_seed;
  for (const auto& [id, profile] : corpus.profiles) {
    nlohmann::json p;
    p["f0_start_hz"] = profile.f0_start_hz;
    p["f0_end_hz"] = profile.f0_end_hz;
    p["harmonic_amps"] = std::vector<double>(
        profile.harmonic_amps.data(),
        profile.harmonic_amps.data() + profile.harmonic_amps.size());
    for (const auto& formant : profile.formants)
      p["formants"].push_back({{"center_hz", formant.center_hz},
                               {"bandwidth_hz", formant.bandwidth_hz},
                               {"gain", formant.gain}});
    p["spectral_tilt"] = profile.spectral_tilt;
    p["duration_mean_s"] = profile.duration_mean_s;
    p["duration_sd_s"] = profile.duration_sd_s;
    p["two_voice_ratio"] = profile.two_voice_ratio;
    p["two_voice_level"] = profile.two_voice_level;
    p["noise_floor_db"] = profile.noise_floor_db;
    j["profiles"][id] = p;
  }
  std::ofstream pj(base / "profiles.json", std::ios::trunc);
  if (!pj) raise(ErrorCode::io_error, "cannot write profiles.json");
  pj << j.dump(2) << '\n';
}

}  // namespace callkit
