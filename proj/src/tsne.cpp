// callkit/tsne.cpp
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

#include "callkit/tsne.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "callkit/errors.hpp"
#include "callkit/rng.hpp"

namespace callkit {

namespace {

struct RowEntropy {
  double entropy;          // nats
  Eigen::VectorXd probs;   // full length n, zero at the diagonal
};

RowEntropy row_probabilities(const Eigen::VectorXd& sq_dist, Eigen::Index self,
                             double beta) {
  const Eigen::Index n = sq_dist.size();
  double shift = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != self) shift = std::min(shift, sq_dist[j]);

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double sum = 0.0;
  double weighted = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == self) continue;
    const double e = sq_dist[j] - shift;
    const double w = std::exp(-beta * e);
    p[j] = w;
    sum += w;
    weighted += w * e;
  }
  // H = ln(sum) + beta * E[e]; invariant to the shift.
  const double entropy = std::log(sum) + beta * weighted / sum;
  p /= sum;
  return {entropy, std::move(p)};
}

}  // namespace

Eigen::MatrixXd tsne_conditional_probabilities(const DistanceMatrix& dm,
                                               double perplexity) {
  const Eigen::Index n = dm.size();
  if (perplexity <= 1.0)
    raise(ErrorCode::invalid_argument, "perplexity must exceed 1");
  if (static_cast<double>(n) <= 3.0 * perplexity)
    raise(ErrorCode::invalid_argument, "need n > 3 * perplexity points");

  const bool euclidean = dm.metric_tag.rfind("euclidean", 0) == 0;
  Eigen::MatrixXd sq = dm.values;
  if (euclidean) sq = sq.array().square();

  const double target = std::log(perplexity);
  Eigen::MatrixXd cond(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row_dist = sq.row(i).transpose();
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    RowEntropy row = row_probabilities(row_dist, i, beta);
    for (int step = 0; step < 256 && std::abs(row.entropy - target) > 1e-7;
         ++step) {
      if (row.entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (lo + beta);
      }
      row = row_probabilities(row_dist, i, beta);
    }
    if (std::abs(row.entropy - target) > 1e-4)
      raise(ErrorCode::infeasible_perplexity,
            "entropy search failed for point " + std::to_string(i));
    cond.row(i) = row.probs.transpose();
  }
  return cond;
}

Embedding tsne(const DistanceMatrix& dm, const TsneOptions& options) {
  const Eigen::Index n = dm.size();
  if (options.iters < 1) raise(ErrorCode::invalid_argument, "iters must be >= 1");

  const Eigen::MatrixXd cond =
      tsne_conditional_probabilities(dm, options.perplexity);
  Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));

  Embedding embedding;
  embedding.perplexity = options.perplexity;
  embedding.seed = options.seed;
  embedding.call_ids = dm.call_ids;
  embedding.coords.resize(n, 2);
  embedding.kl_history.reserve(static_cast<std::size_t>(options.iters));

  // Seed each point from its call id so permuting inputs permutes outputs.
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_seed(options.seed,
                        fnv1a(dm.call_ids[static_cast<std::size_t>(i)])));
    embedding.coords(i, 0) = 1e-4 * rng.normal();
    embedding.coords(i, 1) = 1e-4 * rng.normal();
  }

  Eigen::MatrixX2d velocity = Eigen::MatrixX2d::Zero(n, 2);
  Eigen::MatrixX2d gains = Eigen::MatrixX2d::Ones(n, 2);
  Eigen::MatrixXd w(n, n);       // Student-t kernel weights
  Eigen::MatrixX2d gradient(n, 2);

  for (int iter = 0; iter < options.iters; ++iter) {
    const bool exaggerating = iter < options.exaggeration_iters;
    const double p_scale = exaggerating ? options.exaggeration : 1.0;
    const double momentum = exaggerating ? 0.5 : 0.8;

    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double dx = embedding.coords(i, 0) - embedding.coords(j, 0);
        const double dy = embedding.coords(i, 1) - embedding.coords(j, 1);
        const double weight = 1.0 / (1.0 + dx * dx + dy * dy);
        w(i, j) = weight;
        w(j, i) = weight;
        z += 2.0 * weight;
      }
    }

    double kl = 0.0;
    gradient.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = w(i, j) / z;
        const double coeff = (p_scale * p(i, j) - q) * w(i, j);
        gx += coeff * (embedding.coords(i, 0) - embedding.coords(j, 0));
        gy += coeff * (embedding.coords(i, 1) - embedding.coords(j, 1));
        if (p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / q);
      }
      gradient(i, 0) = 4.0 * gx;
      gradient(i, 1) = 4.0 * gy;
    }
    embedding.kl_history.push_back(kl);

    // Adaptive per-coordinate gains, as in the reference implementation:
    // grow when the gradient keeps its direction against the velocity,
    // shrink when it flips.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (gradient(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(0.01, gains(i, c) * 0.8)
                                : gains(i, c) + 0.2;
      }
    }
    velocity = momentum * velocity -
               options.learning_rate * gains.cwiseProduct(gradient);
    embedding.coords += velocity;
    embedding.coords.rowwise() -= embedding.coords.colwise().mean();
  }

  if (!embedding.coords.allFinite())
    raise(ErrorCode::not_finite, "t-SNE diverged");
  return embedding;
}

void write_embedding_csv(const std::string& path, const Embedding& embedding,
                         const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << "call_id,x,y,label\n";
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index i = 0; i < embedding.coords.rows(); ++i) {
    line.str("");
    line << embedding.call_ids[static_cast<std::size_t>(i)] << ','
         << embedding.coords(i, 0) << ',' << embedding.coords(i, 1) << ',';
    if (static_cast<std::size_t>(i) < labels.size())
      line << labels[static_cast<std::size_t>(i)];
    out << line.str() << '\n';
  }
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

}  // namespace callkit
