// callkit/lmnn.hpp
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

/// Fixed-size feature vectors: onset-cropped spectrograms pooled to
/// T frames x F bands, flattened time-major, then standardized per feature.
/// The stored mean/scale reproduce the standardization exactly.
struct FeatureMatrix {
  Eigen::MatrixXd vectors;  // n x d, d = pixel_T * pixel_F, standardized
  Eigen::Index pixel_T = 0;
  Eigen::Index pixel_F = 0;
  std::vector<std::string> labels;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;

  Eigen::Index n() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

/// Crop/pad to T frames from the onset (pad with 0, or the log floor for
/// log spectrograms), average-pool the bins into F equal bands, flatten
/// time-major. Raw pixels; standardization happens in build_feature_matrix.
Eigen::VectorXd featurize(const Spectrogram& spec, Eigen::Index T = 48,
                          Eigen::Index F = 64);

FeatureMatrix build_feature_matrix(const std::vector<Spectrogram>& specs,
                                   const std::vector<std::string>& labels,
                                   Eigen::Index T = 48, Eigen::Index F = 64);

/// Learned linear transformation plus per-feature importance weights
/// (column squared norms of the projection).
struct LinearMetric {
  Eigen::MatrixXd projection;  // d' x d
  Eigen::VectorXd importance;  // d, = diag(L^T L)
  std::vector<double> loss_history;
  Eigen::Index pixel_T = 0;
  Eigen::Index pixel_F = 0;
};

struct LmnnOptions {
  int k = 3;
  double mu = 0.5;        // push/pull balance
  int max_iters = 200;
  Eigen::Index out_dim = 0;  // 0 keeps the full dimension (L starts at I)
  double initial_step = 1.0;
};

/// Large-margin-nearest-neighbour objective:
///   (1-mu) sum_{i,j in targets} ||L(x_i - x_j)||^2
///   + mu sum_{i,j,l} [1 + ||L(x_i - x_j)||^2 - ||L(x_i - x_l)||^2]_+
/// with target neighbours fixed at start and impostors rescanned every
/// iteration. Gradient descent with backtracking step halving; accepted
/// losses are non-increasing. Classes smaller than k+1 are dropped with a
/// warning on stderr.
LinearMetric lmnn_fit(const FeatureMatrix& features,
                      const LmnnOptions& options = {});

/// Objective value at an arbitrary projection (target neighbours derived
/// from the features with the same fixed rule lmnn_fit uses).
double lmnn_loss(const FeatureMatrix& features, const Eigen::MatrixXd& L,
                 int k = 3, double mu = 0.5);

/// Analytic gradient of lmnn_loss at L.
Eigen::MatrixXd lmnn_gradient(const FeatureMatrix& features,
                              const Eigen::MatrixXd& L, int k = 3,
                              double mu = 0.5);

/// Importance vector reshaped to the (T, F) pixel grid.
Eigen::MatrixXd importance_map(const LinearMetric& metric);

/// Entries replaced by their average rank, scaled to [0, 1].
Eigen::MatrixXd rank_transform(const Eigen::MatrixXd& map);

}  // namespace callkit
