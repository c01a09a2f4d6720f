// callkit/distance.hpp
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

#include "callkit/spectrogram.hpp"

namespace callkit {

enum class Metric { euclidean, manhattan };

const char* metric_name(Metric metric);

/// Symmetric pairwise distances over a labelled call set. metric_tag is
/// "<metric>_<mag|log>"; representation_tag names the signal representation
/// the spectrograms came from (e.g. "lpc_residual_stft").
struct DistanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> call_ids;
  std::string metric_tag;
  std::string representation_tag;

  Eigen::Index size() const { return values.rows(); }
};

/// Minimum distance over whole-frame relative shifts within +/-max_shift_ms
/// (shift count rounded to the nearest frame). For each shift the metric is
/// taken over the union of both frame ranges, absent frames padded with 0
/// (or the log floor), and normalized by the pixel count of that region.
/// The shift set is symmetric, so the result is exactly symmetric in a, b.
double spec_distance(const Spectrogram& a, const Spectrogram& b, Metric metric,
                     double max_shift_ms = 20.0);

/// Full symmetric matrix of spec_distance over the call set. Pairs are
/// independent and computed in parallel; each entry is written to its own
/// slot so the result does not depend on scheduling.
DistanceMatrix pairwise_matrix(const std::vector<Spectrogram>& specs,
                               const std::vector<std::string>& ids,
                               Metric metric, double max_shift_ms = 20.0,
                               int n_threads = 0);

/// CSV with a `# metric=... representation=...` comment, a header row of
/// call ids, and one row per call (row id first).
void write_distance_csv(const std::string& path, const DistanceMatrix& dm);
DistanceMatrix read_distance_csv(const std::string& path);

/// Compact binary matrix in the spectrogram container (float32, header
/// n, n, 0, 0). Ids are not stored; the CSV is the id-bearing format.
void write_distance_binary(const std::string& path, const DistanceMatrix& dm);

}  // namespace callkit
