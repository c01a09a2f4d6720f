// tests/test_distance.cpp
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
#include <filesystem>

#include "doctest.h"

#include "callkit/distance.hpp"
#include "callkit/errors.hpp"
#include "callkit/rng.hpp"

using namespace callkit;

namespace {

Spectrogram random_spec(Eigen::Index frames, Eigen::Index bins,
                        std::uint64_t seed, bool log_scale = false) {
  Rng rng(seed);
  Spectrogram spec;
  spec.values.resize(frames, bins);
  for (Eigen::Index f = 0; f < frames; ++f)
    for (Eigen::Index b = 0; b < bins; ++b)
      spec.values(f, b) = static_cast<float>(
          log_scale ? rng.uniform(-80.0, 0.0) : rng.uniform(0.0, 1.0));
  spec.frame_hop = 256;
  spec.frame_size = 1024;
  spec.sample_rate = 48000;
  spec.is_log = log_scale;
  if (log_scale) spec.log_floor_db = -80.0f;
  spec.time_origin = 512;
  return spec;
}

Spectrogram prepend_zero_frames(const Spectrogram& spec, Eigen::Index count) {
  Spectrogram out = spec;
  out.values.resize(spec.n_frames() + count, spec.n_bins());
  out.values.topRows(count).setZero();
  out.values.bottomRows(spec.n_frames()) = spec.values;
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("distance");

TEST_CASE("identical spectrograms are at distance zero") {
  const Spectrogram a = random_spec(20, 64, 1);
  CHECK(spec_distance(a, a, Metric::manhattan) == 0.0);
  CHECK(spec_distance(a, a, Metric::euclidean) == 0.0);
}

TEST_CASE("a two-frame shift inside the search window recovers zero") {
  const Spectrogram a = random_spec(30, 64, 2);
  const Spectrogram b = prepend_zero_frames(a, 2);  // ~10.7 ms at hop 256
  CHECK(spec_distance(a, b, Metric::manhattan, 20.0) == 0.0);
  CHECK(spec_distance(a, b, Metric::euclidean, 20.0) == 0.0);
  // without the search the shift costs something
  CHECK(spec_distance(a, b, Metric::manhattan, 0.0) > 0.0);
}

TEST_CASE("hand-computed 1x2 distances with pixel normalization") {
  Spectrogram a = random_spec(1, 2, 3);
  Spectrogram b = a;
  a.values << 0.0f, 0.0f;
  b.values << 3.0f, 4.0f;
  CHECK(spec_distance(a, b, Metric::euclidean, 0.0) == doctest::Approx(5.0 / 2.0));
  CHECK(spec_distance(a, b, Metric::manhattan, 0.0) == doctest::Approx(7.0 / 2.0));
}

TEST_CASE("bin-count mismatch is rejected") {
  const Spectrogram a = random_spec(10, 64, 4);
  const Spectrogram b = random_spec(10, 32, 5);
  CHECK_THROWS_AS(spec_distance(a, b, Metric::manhattan), Error);
}

TEST_CASE("mixing mag and log spectrograms is rejected") {
  const Spectrogram a = random_spec(10, 16, 6, false);
  const Spectrogram b = random_spec(10, 16, 7, true);
  CHECK_THROWS_AS(spec_distance(a, b, Metric::manhattan), Error);
}

TEST_CASE("searching shifts never increases the distance") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Spectrogram a = random_spec(25 + seed % 7, 32, 100 + seed);
    const Spectrogram b = random_spec(28 - seed % 5, 32, 200 + seed);
    for (Metric metric : {Metric::euclidean, Metric::manhattan}) {
      const double searched = spec_distance(a, b, metric, 20.0);
      const double rigid = spec_distance(a, b, metric, 0.0);
      CHECK(searched <= rigid);
    }
  }
}

TEST_CASE("distance is exactly symmetric, including unequal lengths") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Spectrogram a = random_spec(20 + seed, 24, 300 + seed, seed % 2 == 1);
    const Spectrogram b = random_spec(35 - seed, 24, 400 + seed, seed % 2 == 1);
    for (Metric metric : {Metric::euclidean, Metric::manhattan}) {
      const double ab = spec_distance(a, b, metric, 20.0);
      const double ba = spec_distance(b, a, metric, 20.0);
      CHECK(ab == ba);  // bitwise
    }
  }
}

TEST_CASE("distances are absolutely homogeneous in the magnitudes") {
  const Spectrogram a = random_spec(18, 32, 11);
  const Spectrogram b = random_spec(22, 32, 12);
  const double c = 3.5;
  Spectrogram sa = a, sb = b;
  sa.values *= static_cast<float>(c);
  sb.values *= static_cast<float>(c);
  for (Metric metric : {Metric::euclidean, Metric::manhattan}) {
    const double base = spec_distance(a, b, metric, 20.0);
    const double scaled = spec_distance(sa, sb, metric, 20.0);
    CHECK(scaled == doctest::Approx(c * base).epsilon(1e-6));
  }
}

TEST_CASE("pairwise matrix of identical calls is zero") {
  const Spectrogram a = random_spec(15, 16, 13);
  const DistanceMatrix dm =
      pairwise_matrix({a, a}, {"x", "y"}, Metric::manhattan);
  CHECK(dm.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(dm.metric_tag == "manhattan_mag");
}

TEST_CASE("matrix entries equal direct spec_distance calls") {
  const std::vector<Spectrogram> specs = {random_spec(20, 16, 21),
                                          random_spec(24, 16, 22),
                                          random_spec(18, 16, 23)};
  const DistanceMatrix dm =
      pairwise_matrix(specs, {"a", "b", "c"}, Metric::euclidean, 20.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(dm.values(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(dm.values(i, j) ==
            spec_distance(specs[static_cast<std::size_t>(i)],
                          specs[static_cast<std::size_t>(j)], Metric::euclidean,
                          20.0));
    }
  }
}

TEST_CASE("parallel and single-threaded matrices are bit-identical") {
  std::vector<Spectrogram> specs;
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < 12; ++i) {
    specs.push_back(random_spec(20 + i % 5, 24, 500 + i));
    ids.push_back("call" + std::to_string(i));
  }
  const DistanceMatrix serial =
      pairwise_matrix(specs, ids, Metric::manhattan, 20.0, 1);
  const DistanceMatrix threaded =
      pairwise_matrix(specs, ids, Metric::manhattan, 20.0, 4);
  const DistanceMatrix again =
      pairwise_matrix(specs, ids, Metric::manhattan, 20.0, 4);
  CHECK(serial.values.cwiseEqual(threaded.values).all());
  CHECK(again.values.cwiseEqual(threaded.values).all());
}

TEST_CASE("fewer than two calls is an error") {
  const std::vector<Spectrogram> one = {random_spec(10, 8, 31)};
  CHECK_THROWS_AS(pairwise_matrix(one, {"only"}, Metric::manhattan), Error);
}

TEST_CASE("distance CSV round-trips values and tags") {
  std::vector<Spectrogram> specs;
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < 5; ++i) {
    specs.push_back(random_spec(12, 8, 600 + i));
    ids.push_back("c" + std::to_string(i));
  }
  DistanceMatrix dm = pairwise_matrix(specs, ids, Metric::euclidean, 20.0);
  dm.representation_tag = "raw_stft";
  const std::string path =
      (std::filesystem::temp_directory_path() / "ck_dm.csv").string();
  write_distance_csv(path, dm);
  const DistanceMatrix loaded = read_distance_csv(path);
  CHECK(loaded.call_ids == dm.call_ids);
  CHECK(loaded.metric_tag == dm.metric_tag);
  CHECK(loaded.representation_tag == "raw_stft");
  CHECK((loaded.values - dm.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
