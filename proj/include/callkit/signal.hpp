// callkit/signal.hpp
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
#include <string>
#include <vector>

namespace callkit {

/// Mono waveform. Samples are normalized to [-1, 1]; onset_index marks
/// where the call energy starts (sample units).
struct Signal {
  Eigen::ArrayXd samples;
  int sample_rate = 0;
  Eigen::Index onset_index = 0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

struct LabelledCall {
  Signal signal;
  std::string individual_id;
  std::string call_id;
};

/// Source encoding details filled in by load_wav.
struct WavInfo {
  int bits_per_sample = 0;
  int channels = 0;
  int sample_rate = 0;
};

/// Reads a 16- or 24-bit integer PCM RIFF/WAVE file. Stereo (or any
/// multi-channel) input is averaged down to mono; integer samples are
/// scaled by 1/2^(bits-1). Float, mu-law and other encodings are rejected
/// with ErrorCode::unsupported_encoding.
Signal load_wav(const std::string& path, WavInfo* info = nullptr);

/// Writes mono integer PCM, 16 or 24 bits. Samples are clamped to [-1, 1]
/// and rounded to the nearest code.
void save_wav(const std::string& path, const Signal& signal, int bits = 16);

/// Energy-threshold onset: the start of the first frame (frame_ms long,
/// non-overlapping) whose RMS exceeds the peak frame RMS scaled by
/// threshold_db. Throws ErrorCode::no_onset for all-silent input.
Eigen::Index detect_onset(const Signal& signal, double frame_ms = 5.0,
                          double threshold_db = -30.0);

/// Drops everything before the onset so frame 0 of any downstream
/// spectrogram starts at the call onset.
Signal trim_to_onset(const Signal& signal);

/// Reads a two-column CSV (call file name or id, individual id). A header
/// line is skipped when its second field looks like a column name.
std::vector<std::pair<std::string, std::string>> read_labels_csv(
    const std::string& path);

/// Loads every file listed in the labels CSV from `dir`, detects onsets,
/// and pairs signals with their individual ids. call_id is the file name.
std::vector<LabelledCall> load_corpus(const std::string& dir,
                                      const std::string& labels_csv);

}  // namespace callkit
