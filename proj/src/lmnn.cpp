// callkit/lmnn.cpp
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

#include "callkit/lmnn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

#include "callkit/errors.hpp"

namespace callkit {

namespace {

/// k same-class nearest neighbours per point (Euclidean, ties by index).
std::vector<std::vector<Eigen::Index>> target_neighbours(
    const Eigen::MatrixXd& x, const std::vector<int>& classes, int k) {
  const Eigen::Index n = x.rows();
  std::vector<std::vector<Eigen::Index>> targets(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> same;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || classes[static_cast<std::size_t>(j)] !=
                        classes[static_cast<std::size_t>(i)])
        continue;
      same.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
    }
    if (static_cast<int>(same.size()) < k)
      raise(ErrorCode::invalid_argument,
            "a class has fewer than k+1 members after filtering");
    std::partial_sort(same.begin(), same.begin() + k, same.end());
    for (int t = 0; t < k; ++t)
      targets[static_cast<std::size_t>(i)].push_back(same[static_cast<std::size_t>(t)].second);
  }
  return targets;
}

std::vector<int> encode_classes(const std::vector<std::string>& labels) {
  std::map<std::string, int> index;
  std::vector<int> classes;
  classes.reserve(labels.size());
  for (const auto& label : labels) {
    const auto [it, inserted] =
        index.emplace(label, static_cast<int>(index.size()));
    classes.push_back(it->second);
  }
  return classes;
}

Eigen::MatrixXd projected_sq_distances(const Eigen::MatrixXd& z) {
  const Eigen::VectorXd sq = z.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * z * z.transpose()).eval();
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  return d.cwiseMax(0.0);
}

struct Objective {
  double loss;
  double pull;
  double hinge;
};

Objective evaluate(const Eigen::MatrixXd& x, const std::vector<int>& classes,
                   const std::vector<std::vector<Eigen::Index>>& targets,
                   const Eigen::MatrixXd& L, double mu,
                   Eigen::MatrixXd* push_weights) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd z = x * L.transpose();
  const Eigen::MatrixXd d = projected_sq_distances(z);

  double pull = 0.0;
  double hinge = 0.0;
  if (push_weights) push_weights->setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Eigen::Index j : targets[static_cast<std::size_t>(i)]) {
      pull += d(i, j);
      const double margin = 1.0 + d(i, j);
      for (Eigen::Index l = 0; l < n; ++l) {
        if (classes[static_cast<std::size_t>(l)] ==
            classes[static_cast<std::size_t>(i)])
          continue;
        const double violation = margin - d(i, l);
        if (violation > 0.0) {
          hinge += violation;
          if (push_weights) {
            (*push_weights)(i, j) += 1.0;
            (*push_weights)(i, l) -= 1.0;
          }
        }
      }
    }
  }
  return {(1.0 - mu) * pull + mu * hinge, pull, hinge};
}

/// G = X^T M X for the pair-weight Laplacian of w, where
/// sum_{ij} w_ij (x_i - x_j)(x_i - x_j)^T = X^T (R + C - W - W^T) X.
Eigen::MatrixXd laplacian_quadratic(const Eigen::MatrixXd& x,
                                    const Eigen::MatrixXd& w) {
  Eigen::MatrixXd m = -w - w.transpose();
  const Eigen::VectorXd row_sums = w.rowwise().sum();
  const Eigen::VectorXd col_sums = w.colwise().sum();
  m.diagonal() += row_sums + col_sums;
  return x.transpose() * (m * x);
}

Eigen::MatrixXd pull_weights(
    const std::vector<std::vector<Eigen::Index>>& targets, Eigen::Index n) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const Eigen::Index j : targets[static_cast<std::size_t>(i)]) w(i, j) += 1.0;
  return w;
}

}  // namespace

Eigen::VectorXd featurize(const Spectrogram& spec, Eigen::Index T,
                          Eigen::Index F) {
  if (T < 1 || F < 1) raise(ErrorCode::invalid_argument, "T and F must be >= 1");
  const Eigen::Index n_bins = spec.n_bins();
  if (F > n_bins)
    raise(ErrorCode::invalid_argument, "more bands than frequency bins");
  const float pad =
      spec.is_log && std::isfinite(spec.log_floor_db) ? spec.log_floor_db : 0.0f;

  Eigen::VectorXd out(T * F);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index b = 0; b < F; ++b) {
      const Eigen::Index lo = b * n_bins / F;
      const Eigen::Index hi = (b + 1) * n_bins / F;
      double value;
      if (t < spec.n_frames()) {
        double acc = 0.0;
        for (Eigen::Index bin = lo; bin < hi; ++bin)
          acc += static_cast<double>(spec.values(t, bin));
        value = acc / static_cast<double>(hi - lo);
      } else {
        value = static_cast<double>(pad);
      }
      out[t * F + b] = value;
    }
  }
  return out;
}

FeatureMatrix build_feature_matrix(const std::vector<Spectrogram>& specs,
                                   const std::vector<std::string>& labels,
                                   Eigen::Index T, Eigen::Index F) {
  if (specs.empty() || specs.size() != labels.size())
    raise(ErrorCode::invalid_argument, "specs/labels mismatch");
  FeatureMatrix fm;
  fm.pixel_T = T;
  fm.pixel_F = F;
  fm.labels = labels;
  fm.vectors.resize(static_cast<Eigen::Index>(specs.size()), T * F);
  for (std::size_t i = 0; i < specs.size(); ++i)
    fm.vectors.row(static_cast<Eigen::Index>(i)) = featurize(specs[i], T, F).transpose();

  const Eigen::RowVectorXd mean = fm.vectors.colwise().mean();
  const Eigen::RowVectorXd var =
      (fm.vectors.rowwise() - mean).array().square().colwise().mean();
  const Eigen::RowVectorXd scale = var.array().sqrt().max(1e-8);
  fm.feature_mean = mean.transpose();
  fm.feature_scale = scale.transpose();
  fm.vectors.rowwise() -= mean;
  fm.vectors.array().rowwise() /= scale.array();
  return fm;
}

double lmnn_loss(const FeatureMatrix& features, const Eigen::MatrixXd& L,
                 int k, double mu) {
  const auto classes = encode_classes(features.labels);
  const auto targets = target_neighbours(features.vectors, classes, k);
  return evaluate(features.vectors, classes, targets, L, mu, nullptr).loss;
}

Eigen::MatrixXd lmnn_gradient(const FeatureMatrix& features,
                              const Eigen::MatrixXd& L, int k, double mu) {
  const auto classes = encode_classes(features.labels);
  const auto targets = target_neighbours(features.vectors, classes, k);
  const Eigen::Index n = features.n();
  Eigen::MatrixXd push(n, n);
  evaluate(features.vectors, classes, targets, L, mu, &push);
  const Eigen::MatrixXd g_pull =
      laplacian_quadratic(features.vectors, pull_weights(targets, n));
  const Eigen::MatrixXd g_push = laplacian_quadratic(features.vectors, push);
  return 2.0 * L * ((1.0 - mu) * g_pull + mu * g_push);
}

LinearMetric lmnn_fit(const FeatureMatrix& features, const LmnnOptions& options) {
  if (options.k < 1 || options.mu < 0.0 || options.mu > 1.0)
    raise(ErrorCode::invalid_argument, "bad LMNN options");

  // Drop classes too small to have k target neighbours.
  std::map<std::string, int> counts;
  for (const auto& label : features.labels) counts[label] += 1;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < features.n(); ++i) {
    const auto& label = features.labels[static_cast<std::size_t>(i)];
    if (counts[label] >= options.k + 1) {
      keep.push_back(i);
    }
  }
  for (const auto& [label, count] : counts)
    if (count < options.k + 1)
      std::cerr << "lmnn: dropping class '" << label << "' with " << count
                << " member(s) (< k+1)\n";
  if (keep.size() < 2)
    raise(ErrorCode::invalid_argument, "not enough data after class filtering");

  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  const Eigen::Index d = features.dim();
  Eigen::MatrixXd x(n, d);
  std::vector<std::string> labels(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    x.row(r) = features.vectors.row(keep[static_cast<std::size_t>(r)]);
    labels[static_cast<std::size_t>(r)] =
        features.labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])];
  }
  const auto classes = encode_classes(labels);
  const auto targets = target_neighbours(x, classes, options.k);
  const Eigen::MatrixXd w_pull = pull_weights(targets, n);
  const Eigen::MatrixXd g_pull = laplacian_quadratic(x, w_pull);

  const Eigen::Index d_out = options.out_dim > 0 ? options.out_dim : d;
  if (d_out > d)
    raise(ErrorCode::invalid_argument, "out_dim larger than feature dim");
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(d_out, d);

  LinearMetric metric;
  metric.pixel_T = features.pixel_T;
  metric.pixel_F = features.pixel_F;

  Eigen::MatrixXd push(n, n);
  Objective current = evaluate(x, classes, targets, L, options.mu, &push);
  if (!std::isfinite(current.loss))
    raise(ErrorCode::not_finite, "non-finite LMNN loss at initialization");
  metric.loss_history.push_back(current.loss);

  const double target_pairs = static_cast<double>(n) * options.k;
  double step = options.initial_step / target_pairs;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    const Eigen::MatrixXd g_push = laplacian_quadratic(x, push);
    const Eigen::MatrixXd gradient =
        2.0 * L * ((1.0 - options.mu) * g_pull + options.mu * g_push);
    const double gnorm = gradient.norm();
    if (gnorm < 1e-12) break;

    // Backtracking: halve the step until the loss stops increasing.
    bool accepted = false;
    Objective proposal{};
    Eigen::MatrixXd l_new;
    Eigen::MatrixXd push_new(n, n);
    for (int attempt = 0; attempt < 40; ++attempt) {
      l_new = L - step * gradient;
      proposal = evaluate(x, classes, targets, l_new, options.mu, &push_new);
      if (!std::isfinite(proposal.loss))
        raise(ErrorCode::not_finite, "non-finite LMNN loss during descent");
      if (proposal.loss <= current.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    L = std::move(l_new);
    push = std::move(push_new);
    const double improvement = current.loss - proposal.loss;
    current = proposal;
    metric.loss_history.push_back(current.loss);
    step *= 1.1;
    if (improvement <= 1e-12 * std::max(1.0, std::abs(current.loss))) break;
  }

  metric.projection = std::move(L);
  metric.importance = metric.projection.colwise().squaredNorm().transpose();
  return metric;
}

Eigen::MatrixXd importance_map(const LinearMetric& metric) {
  const Eigen::Index T = metric.pixel_T;
  const Eigen::Index F = metric.pixel_F;
  if (T * F != metric.importance.size())
    raise(ErrorCode::shape_mismatch, "pixel shape does not match importance");
  Eigen::MatrixXd map(T, F);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index b = 0; b < F; ++b) map(t, b) = metric.importance[t * F + b];
  return map;
}

Eigen::MatrixXd rank_transform(const Eigen::MatrixXd& map) {
  const Eigen::Index count = map.size();
  if (count == 0) return map;
  if (!map.allFinite())
    raise(ErrorCode::not_finite, "rank_transform needs finite entries");
  if (count == 1) return Eigen::MatrixXd::Constant(1, 1, 0.5);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  const double* data = map.data();
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return data[a] < data[b]; });

  Eigen::MatrixXd ranks(map.rows(), map.cols());
  double* out = ranks.data();
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && data[order[j + 1]] == data[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j);  // tied ranks
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = average;
    i = j + 1;
  }
  ranks /= static_cast<double>(count - 1);
  return ranks;
}

}  // namespace callkit
