// callkit/spectrogram.hpp
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
#include <limits>
#include <string>

#include "callkit/signal.hpp"

namespace callkit {

/// Regular time-frequency magnitude (or log-magnitude) matrix. Rows are
/// frames, columns are frequency bins; the storage is row-major so a frame
/// is contiguous, matching the binary export layout.
struct Spectrogram {
  using Matrix =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Matrix values;               // n_frames x n_bins
  Eigen::Index frame_hop = 0;  // samples between frame starts
  Eigen::Index frame_size = 0;
  int sample_rate = 0;
  bool is_log = false;
  Eigen::Index time_origin = 0;  // sample index of the first frame center
  // Relative dB floor applied by log_magnitude; NaN while linear.
  float log_floor_db = std::numeric_limits<float>::quiet_NaN();

  Eigen::Index n_frames() const { return values.rows(); }
  Eigen::Index n_bins() const { return values.cols(); }

  /// Center of frame f in samples of the source signal.
  double frame_center(Eigen::Index f) const {
    return static_cast<double>(time_origin + f * frame_hop);
  }
  /// Frequency of bin b in Hz.
  double bin_frequency(Eigen::Index b) const {
    return static_cast<double>(b) * sample_rate / static_cast<double>(frame_size);
  }
};

/// Hann-windowed one-sided magnitude STFT. hop = frame_size * (1 - overlap);
/// n_frames = floor((len - frame_size)/hop) + 1. Magnitudes are normalized
/// by the window sum, so a full-scale sine at a bin center reads ~0.5.
/// frame_size must be a power of two.
Spectrogram stft_magnitude(const Signal& signal, Eigen::Index frame_size = 1024,
                           double overlap = 0.75);

/// Per-pixel dB relative to reference_max (per-call maximum when NaN),
/// clamped at floor_db: value = max(20 log10(m / ref), floor_db).
Spectrogram log_magnitude(const Spectrogram& spec, double floor_db = -80.0,
                          double reference_max =
                              std::numeric_limits<double>::quiet_NaN());

/// One spectrum vector replicated across n_frames rows, used to push a
/// per-call spectrum (like the LPC filter) through spectrogram pipelines.
Spectrogram tiled_spectrogram(const Eigen::VectorXd& spectrum,
                              Eigen::Index n_frames, Eigen::Index frame_hop,
                              Eigen::Index frame_size, int sample_rate);

/// Compact binary: 16-byte header of four little-endian uint32
/// (n_frames, n_bins, hop, frame_size) then row-major float32 values.
void write_spectrogram_binary(const std::string& path, const Spectrogram& spec);
Spectrogram read_spectrogram_binary(const std::string& path);

/// Plain CSV matrix, one frame per row.
void write_spectrogram_csv(const std::string& path, const Spectrogram& spec);

namespace detail {
/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(Eigen::VectorXcd& data);
/// Periodic Hann window of length n.
Eigen::ArrayXd hann_window(Eigen::Index n);
}  // namespace detail

}  // namespace callkit
