// callkit/adft.cpp
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

#include "callkit/adft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>

#include "callkit/errors.hpp"

namespace callkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVoicingThreshold = 0.3;
// Mild preference for the higher of two near-equal periodicity candidates;
// suppresses subharmonic (octave-down) picks on strongly periodic frames.
constexpr double kHighF0Bias = 0.02;
constexpr double kOctaveJumpPenalty = 3.0;

struct F0Candidate {
  double freq_hz;
  double strength;  // refined normalized autocorrelation peak
};

struct VoicedFrame {
  Eigen::Index center;
  std::vector<F0Candidate> candidates;
};

/// Linear interpolation of (center, value) knots to per-sample resolution;
/// the ends are extrapolated with the boundary slope.
Eigen::ArrayXd knots_to_curve(const std::vector<Eigen::Index>& centers,
                              const std::vector<double>& values,
                              Eigen::Index n) {
  Eigen::ArrayXd curve(n);
  if (centers.size() == 1) {
    curve.setConstant(values[0]);
    return curve;
  }
  const std::size_t m = centers.size();
  const double head_slope = (values[1] - values[0]) /
                            static_cast<double>(centers[1] - centers[0]);
  const double tail_slope =
      (values[m - 1] - values[m - 2]) /
      static_cast<double>(centers[m - 1] - centers[m - 2]);
  std::size_t seg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i <= centers.front()) {
      curve[i] = values[0] + head_slope * static_cast<double>(i - centers.front());
    } else if (i >= centers.back()) {
      curve[i] = values[m - 1] + tail_slope * static_cast<double>(i - centers.back());
    } else {
      while (seg + 2 < m && centers[seg + 1] < i) ++seg;
      const double t = static_cast<double>(i - centers[seg]) /
                       static_cast<double>(centers[seg + 1] - centers[seg]);
      curve[i] = values[seg] + t * (values[seg + 1] - values[seg]);
    }
  }
  return curve;
}

void slew_limit_and_clamp(Eigen::ArrayXd& curve, double max_step, double lo,
                          double hi) {
  const Eigen::Index n = curve.size();
  for (Eigen::Index i = 1; i < n; ++i)
    curve[i] = std::clamp(curve[i], curve[i - 1] - max_step, curve[i - 1] + max_step);
  for (Eigen::Index i = n - 2; i >= 0; --i)
    curve[i] = std::clamp(curve[i], curve[i + 1] - max_step, curve[i + 1] + max_step);
  curve = curve.cwiseMax(lo).cwiseMin(hi);
}

/// Accumulated phase phi(n) = 2 pi sum_{m<n} f0(m) / fs.
Eigen::ArrayXd phase_curve(const Eigen::ArrayXd& f0, int sample_rate) {
  Eigen::ArrayXd phi(f0.size() + 1);
  phi[0] = 0.0;
  const double scale = 2.0 * kPi / sample_rate;
  for (Eigen::Index i = 0; i < f0.size(); ++i) phi[i + 1] = phi[i] + scale * f0[i];
  return phi;
}

struct AnalysisFrame {
  Eigen::Index center;
  Eigen::Index window_len;  // nominal, before edge truncation
};

std::vector<AnalysisFrame> pitch_sync_frames(const Eigen::ArrayXd& f0,
                                             int sample_rate,
                                             double window_periods) {
  std::vector<AnalysisFrame> frames;
  const Eigen::Index n = f0.size();
  Eigen::Index t = 0;
  while (t < n) {
    AnalysisFrame frame;
    frame.center = t;
    frame.window_len = std::max<Eigen::Index>(
        4, static_cast<Eigen::Index>(std::lround(window_periods * sample_rate / f0[t])));
    frames.push_back(frame);
    const Eigen::Index period = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::lround(sample_rate / f0[t])));
    t += period;
  }
  return frames;
}

/// Windowed inner products of the signal against e^{-j k phi(n)} for
/// k = 1..n_harmonics over [n0, n1), normalized by the window sum. The
/// window is a periodic Hann of length window_len laid over
/// [center - window_len/2, ...), truncated at the signal edges.
Eigen::VectorXcd demodulate_window(const Eigen::ArrayXd& samples,
                                   const Eigen::ArrayXd& phi,
                                   Eigen::Index center, Eigen::Index window_len,
                                   int n_harmonics, bool* was_truncated) {
  const Eigen::Index n = samples.size();
  const Eigen::Index begin_nominal = center - window_len / 2;
  const Eigen::Index n0 = std::max<Eigen::Index>(0, begin_nominal);
  const Eigen::Index n1 = std::min(n, begin_nominal + window_len);
  if (was_truncated) *was_truncated = (n0 != begin_nominal) || (n1 != begin_nominal + window_len);
  const Eigen::Index len = n1 - n0;
  Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(n_harmonics);
  if (len <= 0) return coeffs;

  Eigen::ArrayXd w(len);
  for (Eigen::Index j = 0; j < len; ++j) {
    const double u = static_cast<double>(n0 + j - begin_nominal) / window_len;
    w[j] = 0.5 - 0.5 * std::cos(2.0 * kPi * u);
  }
  const double wsum = w.sum();
  if (wsum <= 0.0) return coeffs;

  // z holds w * x * e^{-j k phi}; one complex multiply per sample per k.
  Eigen::ArrayXcd base(len), z(len);
  for (Eigen::Index j = 0; j < len; ++j) {
    const double p = phi[n0 + j];
    base[j] = std::complex<double>(std::cos(p), -std::sin(p));
    z[j] = w[j] * samples[n0 + j];
  }
  for (int k = 1; k <= n_harmonics; ++k) {
    z *= base;
    coeffs[k - 1] = z.sum() / wsum;
  }
  return coeffs;
}

int harmonics_below_nyquist(double f0, int sample_rate) {
  const double nyquist = 0.5 * sample_rate;
  int k = static_cast<int>(std::floor(nyquist / f0));
  while (k > 0 && k * f0 >= nyquist) --k;
  return std::max(k, 1);
}

}  // namespace

F0Track estimate_f0_track(const Signal& signal, double f_min, double f_max,
                          double slew_hz_per_ms) {
  const Eigen::Index n = signal.samples.size();
  const int fs = signal.sample_rate;
  if (fs <= 0) raise(ErrorCode::invalid_argument, "signal has no sample rate");
  if (f_min <= 0.0 || f_max <= f_min || f_max >= 0.5 * fs)
    raise(ErrorCode::invalid_argument, "invalid F0 range");
  const Eigen::Index lag_min =
      std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::floor(fs / f_max)));
  const Eigen::Index lag_max =
      static_cast<Eigen::Index>(std::ceil(fs / f_min));
  if (n < 2 * lag_max)
    raise(ErrorCode::invalid_argument,
          "signal shorter than two periods of f_min");

  const Eigen::Index window = lag_max;  // integration window of the NCC
  const Eigen::Index hop =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(0.005 * fs)));

  // Prefix energy for O(1) normalization terms.
  Eigen::ArrayXd prefix_sq(n + 1);
  prefix_sq[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    prefix_sq[i + 1] = prefix_sq[i] + signal.samples[i] * signal.samples[i];
  auto segment_energy = [&](Eigen::Index a, Eigen::Index len) {
    return prefix_sq[a + len] - prefix_sq[a];
  };

  std::vector<VoicedFrame> voiced;
  const Eigen::VectorXd x = signal.samples.matrix();
  for (Eigen::Index center = window / 2;; center += hop) {
    const Eigen::Index a = center - window / 2;
    // Allow a shrunken lag range in the run-out so the track reaches the
    // end of the signal instead of extrapolating across a long gap.
    const Eigen::Index lag_hi = std::min(lag_max, n - a - window);
    if (lag_hi < lag_min + 2) break;

    Eigen::ArrayXd ncc(lag_hi + 1);
    const double e0 = segment_energy(a, window);
    if (e0 <= 0.0) {
      if (a + window + lag_hi >= n) break;
      continue;
    }
    for (Eigen::Index lag = lag_min - 1; lag <= lag_hi; ++lag) {
      const double elag = segment_energy(a + lag, window);
      const double denom = std::sqrt(e0 * elag);
      ncc[lag] = denom > 0.0
                     ? x.segment(a, window).dot(x.segment(a + lag, window)) / denom
                     : 0.0;
    }

    VoicedFrame frame;
    frame.center = center;
    for (Eigen::Index lag = lag_min; lag < lag_hi; ++lag) {
      if (ncc[lag] <= kVoicingThreshold) continue;
      if (ncc[lag] < ncc[lag - 1] || ncc[lag] < ncc[lag + 1]) continue;
      // Parabolic peak refinement for sub-sample lag precision.
      const double denom = ncc[lag - 1] - 2.0 * ncc[lag] + ncc[lag + 1];
      double delta = 0.0;
      if (denom < -1e-12) delta = 0.5 * (ncc[lag - 1] - ncc[lag + 1]) / denom;
      delta = std::clamp(delta, -0.5, 0.5);
      const double lag_refined = static_cast<double>(lag) + delta;
      const double strength =
          ncc[lag] - 0.25 * (ncc[lag - 1] - ncc[lag + 1]) * delta;
      const double freq = std::clamp(fs / lag_refined, f_min, f_max);
      frame.candidates.push_back({freq, std::min(strength, 1.0)});
    }
    if (!frame.candidates.empty()) {
      std::sort(frame.candidates.begin(), frame.candidates.end(),
                [](const F0Candidate& a_, const F0Candidate& b_) {
                  return a_.strength > b_.strength;
                });
      if (frame.candidates.size() > 8) frame.candidates.resize(8);
      voiced.push_back(std::move(frame));
    }
    if (a + window + lag_hi >= n) break;
  }

  if (voiced.empty())
    raise(ErrorCode::unvoiced_signal, "no periodicity candidate above threshold");

  // Minimum-cost path over candidates; transitions pay for octave jumps.
  const std::size_t n_frames = voiced.size();
  std::vector<std::vector<double>> cost(n_frames);
  std::vector<std::vector<int>> back(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto& cands = voiced[f].candidates;
    cost[f].resize(cands.size());
    back[f].resize(cands.size(), -1);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double node = (1.0 - cands[c].strength) +
                          kHighF0Bias * std::log2(f_max / cands[c].freq_hz);
      if (f == 0) {
        cost[f][c] = node;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      int best_prev = -1;
      for (std::size_t p = 0; p < voiced[f - 1].candidates.size(); ++p) {
        const double jump = std::abs(
            std::log2(cands[c].freq_hz / voiced[f - 1].candidates[p].freq_hz));
        const double total = cost[f - 1][p] + kOctaveJumpPenalty * jump;
        if (total < best) {
          best = total;
          best_prev = static_cast<int>(p);
        }
      }
      cost[f][c] = best + node;
      back[f][c] = best_prev;
    }
  }

  int pick = 0;
  for (std::size_t c = 1; c < cost[n_frames - 1].size(); ++c)
    if (cost[n_frames - 1][c] < cost[n_frames - 1][pick]) pick = static_cast<int>(c);
  std::vector<double> chosen(n_frames);
  std::vector<Eigen::Index> centers(n_frames);
  for (std::size_t f = n_frames; f-- > 0;) {
    chosen[f] = voiced[f].candidates[static_cast<std::size_t>(pick)].freq_hz;
    centers[f] = voiced[f].center;
    if (f > 0) pick = back[f][static_cast<std::size_t>(pick)];
  }

  F0Track track;
  track.f_min = f_min;
  track.f_max = f_max;
  track.f0 = knots_to_curve(centers, chosen, n);
  const double max_step = slew_hz_per_ms * 1000.0 / fs;  // Hz per sample
  slew_limit_and_clamp(track.f0, max_step, f_min, f_max);
  return track;
}

F0Track halve_f0(const F0Track& track) {
  F0Track out;
  out.f0 = track.f0 * 0.5;
  out.f_min = track.f_min * 0.5;
  out.f_max = track.f_max * 0.5;
  return out;
}

HarmonicSpectrogram adft_spectrogram(const Signal& signal, const F0Track& track,
                                     double window_periods) {
  const Eigen::Index n = signal.samples.size();
  if (track.f0.size() != n)
    raise(ErrorCode::shape_mismatch, "track does not cover the signal");
  if (n == 0) raise(ErrorCode::empty_signal, "empty signal");
  if (window_periods <= 0.0)
    raise(ErrorCode::invalid_argument, "window_periods must be positive");

  const int fs = signal.sample_rate;
  const Eigen::ArrayXd phi = phase_curve(track.f0, fs);
  const auto frames = pitch_sync_frames(track.f0, fs, window_periods);

  HarmonicSpectrogram hspec;
  hspec.sample_rate = fs;
  hspec.frame_times.reserve(frames.size());
  hspec.coefficients.reserve(frames.size());
  hspec.harmonic_freqs.reserve(frames.size());
  hspec.truncated.reserve(frames.size());

  for (const auto& frame : frames) {
    const double f0 = track.f0[frame.center];
    const int n_harmonics = harmonics_below_nyquist(f0, fs);
    bool truncated = false;
    Eigen::VectorXcd coeffs = demodulate_window(
        signal.samples, phi, frame.center, frame.window_len, n_harmonics,
        &truncated);
    Eigen::VectorXd freqs(n_harmonics);
    for (int k = 1; k <= n_harmonics; ++k) freqs[k - 1] = k * f0;
    hspec.frame_times.push_back(static_cast<double>(frame.center));
    hspec.coefficients.push_back(std::move(coeffs));
    hspec.harmonic_freqs.push_back(std::move(freqs));
    hspec.truncated.push_back(truncated);
  }
  return hspec;
}

F0Track refine_f0(const Signal& signal, const F0Track& track, int max_iters,
                  double tol_hz) {
  const Eigen::Index n = signal.samples.size();
  if (track.f0.size() != n)
    raise(ErrorCode::shape_mismatch, "track does not cover the signal");
  const int fs = signal.sample_rate;

  // Analysis instants and window sizes stay fixed across iterations so the
  // captured-energy comparison is over the same structure.
  const auto frames = pitch_sync_frames(track.f0, fs, 3.0);
  const std::size_t m = frames.size();
  std::vector<int> harmonic_count(m);
  for (std::size_t i = 0; i < m; ++i)
    harmonic_count[i] = harmonics_below_nyquist(track.f0[frames[i].center], fs);

  auto total_energy = [&](const std::vector<Eigen::VectorXcd>& coeffs) {
    double e = 0.0;
    for (const auto& c : coeffs) e += c.squaredNorm();
    return e;
  };
  auto analyze = [&](const Eigen::ArrayXd& curve) {
    const Eigen::ArrayXd phi = phase_curve(curve, fs);
    std::vector<Eigen::VectorXcd> coeffs(m);
    for (std::size_t i = 0; i < m; ++i)
      coeffs[i] = demodulate_window(signal.samples, phi, frames[i].center,
                                    frames[i].window_len, harmonic_count[i],
                                    nullptr);
    return coeffs;
  };

  Eigen::ArrayXd curve = track.f0;
  std::vector<Eigen::VectorXcd> coeffs = analyze(curve);
  double energy = total_energy(coeffs);
  const double max_step = 20.0 * 1000.0 / fs;

  const Eigen::Index n_samples = n;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::ArrayXd phi = phase_curve(curve, fs);

    // Per-frame phase-slope mismatch, amplitude^2 weighted across harmonics.
    // Two full-length windows offset by a quarter window keep neighbouring
    // harmonics resolved; frames whose windows would be truncated at the
    // signal edges are left uncorrected.
    std::vector<Eigen::Index> centers(m);
    std::vector<double> corrected(m);
    double max_correction = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::Index center = frames[i].center;
      const Eigen::Index window_len = frames[i].window_len;
      const Eigen::Index quarter = window_len / 4;
      const double f_old = curve[center];
      centers[i] = center;
      corrected[i] = f_old;
      if (center - quarter - window_len / 2 < 0 ||
          center + quarter + window_len - window_len / 2 > n_samples)
        continue;
      const int n_harm = harmonic_count[i];
      const Eigen::VectorXcd left = demodulate_window(
          signal.samples, phi, center - quarter, window_len, n_harm, nullptr);
      const Eigen::VectorXcd right = demodulate_window(
          signal.samples, phi, center + quarter, window_len, n_harm, nullptr);
      double num = 0.0, den = 0.0;
      for (int k = 1; k <= n_harm; ++k) {
        const std::complex<double> rotation =
            right[k - 1] * std::conj(left[k - 1]);
        if (std::abs(rotation) <= 0.0) continue;
        const double dphi = std::arg(rotation);
        const double df =
            dphi * fs / (2.0 * kPi * static_cast<double>(2 * quarter));
        const double weight = std::norm(coeffs[i][k - 1]);
        num += weight * (df / k);
        den += weight;
      }
      double correction = den > 0.0 ? num / den : 0.0;
      correction = std::clamp(correction, -0.2 * f_old, 0.2 * f_old);
      corrected[i] = std::clamp(f_old + correction, track.f_min, track.f_max);
      max_correction = std::max(max_correction, std::abs(corrected[i] - f_old));
    }
    if (max_correction < tol_hz) break;

    Eigen::ArrayXd proposal = knots_to_curve(centers, corrected, n);
    slew_limit_and_clamp(proposal, max_step, track.f_min, track.f_max);

    std::vector<Eigen::VectorXcd> new_coeffs = analyze(proposal);
    const double new_energy = total_energy(new_coeffs);
    if (new_energy < energy * (1.0 - 1e-12)) break;  // revert and stop
    curve = std::move(proposal);
    coeffs = std::move(new_coeffs);
    energy = new_energy;
  }

  F0Track refined;
  refined.f0 = std::move(curve);
  refined.f_min = track.f_min;
  refined.f_max = track.f_max;
  return refined;
}

Spectrogram regrid(const HarmonicSpectrogram& hspec,
                   const Spectrogram& template_spec) {
  if (hspec.n_frames() == 0)
    raise(ErrorCode::invalid_argument, "empty harmonic spectrogram");

  Spectrogram out = template_spec;
  out.is_log = false;
  out.values.setZero();

  const auto& times = hspec.frame_times;
  for (Eigen::Index f = 0; f < out.n_frames(); ++f) {
    const double t = template_spec.frame_center(f);
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - times.begin());
    if (idx == times.size()) {
      idx = times.size() - 1;
    } else if (idx > 0 &&
               t - times[idx - 1] <= times[idx] - t) {  // earlier frame on tie
      idx = idx - 1;
    }
    const auto& freqs = hspec.harmonic_freqs[idx];
    const auto& coeffs = hspec.coefficients[idx];
    const double f0 = freqs[0];
    const int n_harm = static_cast<int>(freqs.size());
    // A pixel is painted only when the nearest harmonic actually lands on
    // it: within half a grid bin, and never past half the local f0 (which
    // is what stops one harmonic from covering a whole band when the grid
    // is coarser than the harmonic spacing).
    const double bin_hz = static_cast<double>(template_spec.sample_rate) /
                          static_cast<double>(template_spec.frame_size);
    const double radius = 0.5 * std::min(f0, bin_hz);
    for (Eigen::Index b = 0; b < out.n_bins(); ++b) {
      const double freq = template_spec.bin_frequency(b);
      int k = static_cast<int>(std::lround(freq / f0));
      k = std::clamp(k, 1, n_harm);
      const double distance = std::abs(freqs[k - 1] - freq);
      if (distance <= radius)
        out.values(f, b) = static_cast<float>(std::abs(coeffs[k - 1]));
    }
  }
  return out;
}

void write_harmonics_csv(const std::string& path,
                         const HarmonicSpectrogram& hspec) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << "t_i,k,freq_hz,magnitude\n";
  std::ostringstream line;
  line.precision(9);
  for (std::size_t i = 0; i < hspec.n_frames(); ++i) {
    for (Eigen::Index k = 0; k < hspec.coefficients[i].size(); ++k) {
      line.str("");
      line << hspec.frame_times[i] << ',' << (k + 1) << ','
           << hspec.harmonic_freqs[i][k] << ','
           << std::abs(hspec.coefficients[i][k]);
      out << line.str() << '\n';
    }
  }
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

}  // namespace callkit
