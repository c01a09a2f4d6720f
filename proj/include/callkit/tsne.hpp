// callkit/tsne.hpp
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
#include <string>
#include <vector>

#include "callkit/distance.hpp"

namespace callkit {

struct Embedding {
  Eigen::MatrixX2d coords;
  std::vector<double> kl_history;  // KL against the unexaggerated P
  double perplexity = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> call_ids;
};

struct TsneOptions {
  double perplexity = 30.0;
  int iters = 1000;
  std::uint64_t seed = 1;
  double learning_rate = 200.0;
  int exaggeration_iters = 250;  // momentum also switches 0.5 -> 0.8 here
  double exaggeration = 12.0;
};

/// Row-stochastic conditional probabilities p_{j|i}: per-point precision
/// found by binary search so each row's entropy is ln(perplexity).
/// Distances are squared first when the matrix is Euclidean-tagged. Throws
/// ErrorCode::infeasible_perplexity when the search cannot hit the target.
Eigen::MatrixXd tsne_conditional_probabilities(const DistanceMatrix& dm,
                                               double perplexity);

/// Exact O(n^2) t-SNE on a precomputed distance matrix. Deterministic for
/// a fixed seed; the per-point initialization is keyed on call ids, so
/// permuting the inputs permutes the output rows.
Embedding tsne(const DistanceMatrix& dm, const TsneOptions& options = {});

/// CSV rows call_id, x, y, label. labels may be empty.
void write_embedding_csv(const std::string& path, const Embedding& embedding,
                         const std::vector<std::string>& labels = {});

}  // namespace callkit
