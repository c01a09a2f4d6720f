// tests/test_tsne.cpp
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

#include <cmath>

#include "doctest.h"

#include "callkit/errors.hpp"
#include "callkit/rng.hpp"
#include "callkit/tsne.hpp"

using namespace callkit;

namespace {

DistanceMatrix two_groups(Eigen::Index per_group, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index n = 2 * per_group;
  DistanceMatrix dm;
  dm.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dm.values(i, i) = 0.0;
    dm.call_ids.push_back("g" + std::to_string(i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool same = (i < per_group) == (j < per_group);
      dm.values(i, j) = dm.values(j, i) =
          same ? rng.uniform(0.05, 0.15) : rng.uniform(80.0, 100.0);
    }
  }
  dm.metric_tag = "manhattan_mag";
  return dm;
}

DistanceMatrix random_dm(Eigen::Index n, std::uint64_t seed,
                         const std::string& metric_tag = "manhattan_log") {
  Rng rng(seed);
  DistanceMatrix dm;
  dm.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dm.values(i, i) = 0.0;
    dm.call_ids.push_back("r" + std::to_string(i));
    for (Eigen::Index j = i + 1; j < n; ++j)
      dm.values(i, j) = dm.values(j, i) = rng.uniform(0.5, 5.0);
  }
  dm.metric_tag = metric_tag;
  return dm;
}

}  // namespace

TEST_SUITE_BEGIN("tsne");

TEST_CASE("per-point entropy hits log(perplexity)") {
  for (const std::string tag : {"manhattan_log", "euclidean_log"}) {
    const DistanceMatrix dm = random_dm(120, 3, tag);
    const double perplexity = 25.0;
    const Eigen::MatrixXd p = tsne_conditional_probabilities(dm, perplexity);
    for (Eigen::Index i = 0; i < dm.size(); ++i) {
      double entropy = 0.0;
      double total = 0.0;
      for (Eigen::Index j = 0; j < dm.size(); ++j) {
        if (p(i, j) > 0.0) entropy -= p(i, j) * std::log(p(i, j));
        total += p(i, j);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(entropy == doctest::Approx(std::log(perplexity)).epsilon(1e-4));
    }
  }
}

TEST_CASE("extreme two-group separation is preserved in 2-D") {
  const DistanceMatrix dm = two_groups(40, 7);
  TsneOptions options;
  options.perplexity = 15.0;
  options.iters = 600;
  options.seed = 4;
  const Embedding embedding = tsne(dm, options);

  Eigen::RowVector2d c1 = Eigen::RowVector2d::Zero();
  Eigen::RowVector2d c2 = Eigen::RowVector2d::Zero();
  for (Eigen::Index i = 0; i < 40; ++i) c1 += embedding.coords.row(i) / 40.0;
  for (Eigen::Index i = 40; i < 80; ++i) c2 += embedding.coords.row(i) / 40.0;
  double max_radius = 0.0;
  for (Eigen::Index i = 0; i < 80; ++i) {
    const Eigen::RowVector2d center = i < 40 ? c1 : c2;
    max_radius = std::max(max_radius, (embedding.coords.row(i) - center).norm());
  }
  CHECK((c1 - c2).norm() / max_radius > 3.0);
}

TEST_CASE("same seed gives bit-identical coordinates") {
  const DistanceMatrix dm = random_dm(60, 11);
  TsneOptions options;
  options.perplexity = 12.0;
  options.iters = 150;
  options.seed = 99;
  const Embedding a = tsne(dm, options);
  const Embedding b = tsne(dm, options);
  CHECK(a.coords.cwiseEqual(b.coords).all());
}

TEST_CASE("KL history is non-negative and settles below the exaggerated phase") {
  const DistanceMatrix dm = two_groups(25, 13);
  TsneOptions options;
  options.perplexity = 10.0;
  options.iters = 400;
  options.exaggeration_iters = 100;
  options.seed = 5;
  const Embedding embedding = tsne(dm, options);
  REQUIRE(embedding.kl_history.size() == 400);
  for (double kl : embedding.kl_history) CHECK(kl >= -1e-9);
  CHECK(embedding.kl_history.back() <=
        embedding.kl_history[99]);  // end of early exaggeration
}

TEST_CASE("permuting inputs permutes output rows") {
  const Eigen::Index n = 50;
  const DistanceMatrix dm = random_dm(n, 17);

  // reverse permutation
  DistanceMatrix permuted;
  permuted.metric_tag = dm.metric_tag;
  permuted.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    permuted.call_ids.push_back(dm.call_ids[static_cast<std::size_t>(n - 1 - i)]);
    for (Eigen::Index j = 0; j < n; ++j)
      permuted.values(i, j) = dm.values(n - 1 - i, n - 1 - j);
  }

  // Few iterations: equivariance is exact up to float summation order, and
  // gradient descent amplifies that noise chaotically over long runs.
  TsneOptions options;
  options.perplexity = 10.0;
  options.iters = 5;
  options.seed = 21;
  const Embedding base = tsne(dm, options);
  const Embedding shuffled = tsne(permuted, options);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    worst = std::max(worst,
                     (shuffled.coords.row(i) - base.coords.row(n - 1 - i)).norm());
  CHECK(worst < 1e-8);
}

TEST_CASE("too few points for the perplexity is rejected") {
  const DistanceMatrix dm = random_dm(20, 23);
  TsneOptions options;
  options.perplexity = 30.0;  // needs n > 90
  CHECK_THROWS_AS(tsne(dm, options), Error);
}

TEST_CASE("degenerate equal distances cannot match the perplexity") {
  DistanceMatrix dm;
  const Eigen::Index n = 64;
  dm.values = Eigen::MatrixXd::Constant(n, n, 2.0);
  dm.values.diagonal().setZero();
  for (Eigen::Index i = 0; i < n; ++i) dm.call_ids.push_back("d" + std::to_string(i));
  dm.metric_tag = "manhattan_log";
  try {
    tsne_conditional_probabilities(dm, 10.0);  // rows pin H at log(63)
    FAIL("degenerate distances must raise");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_perplexity);
  }
}

TEST_SUITE_END();
