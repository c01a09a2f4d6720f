// callkit/distance.cpp
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

#include "callkit/distance.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "callkit/errors.hpp"
#include "callkit/parallel.hpp"

namespace callkit {

namespace {

// Must be symmetric in (a, b) so spec_distance stays exactly symmetric.
float pad_value(const Spectrogram& a, const Spectrogram& b) {
  if (!a.is_log) return 0.0f;
  const bool fa = std::isfinite(a.log_floor_db);
  const bool fb = std::isfinite(b.log_floor_db);
  if (fa && fb) return std::min(a.log_floor_db, b.log_floor_db);
  if (fa) return a.log_floor_db;
  if (fb) return b.log_floor_db;
  return std::min(a.values.minCoeff(), b.values.minCoeff());
}

}  // namespace

const char* metric_name(Metric metric) {
  return metric == Metric::euclidean ? "euclidean" : "manhattan";
}

double spec_distance(const Spectrogram& a, const Spectrogram& b, Metric metric,
                     double max_shift_ms) {
  if (a.n_bins() != b.n_bins())
    raise(ErrorCode::shape_mismatch, "bin counts differ");
  if (a.frame_hop != b.frame_hop)
    raise(ErrorCode::shape_mismatch, "frame hops differ");
  if (a.is_log != b.is_log)
    raise(ErrorCode::shape_mismatch, "mixing magnitude and log spectrograms");
  if (a.n_frames() == 0 || b.n_frames() == 0)
    raise(ErrorCode::invalid_argument, "empty spectrogram");

  const Eigen::Index n_bins = a.n_bins();
  const Eigen::Index ta = a.n_frames();
  const Eigen::Index tb = b.n_frames();
  const Eigen::Index s_max = std::max<Eigen::Index>(
      0, static_cast<Eigen::Index>(
             std::lround(max_shift_ms * 1e-3 * a.sample_rate /
                         static_cast<double>(a.frame_hop))));

  const Eigen::ArrayXf pad = Eigen::ArrayXf::Constant(n_bins, pad_value(a, b));
  auto row_of = [&](const Spectrogram& s, Eigen::Index t) {
    return t >= 0 && t < s.n_frames()
               ? Eigen::Map<const Eigen::ArrayXf>(s.values.data() + t * n_bins,
                                                  n_bins)
               : Eigen::Map<const Eigen::ArrayXf>(pad.data(), n_bins);
  };

  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = -s_max; s <= s_max; ++s) {
    const Eigen::Index lo = std::min<Eigen::Index>(0, s);
    const Eigen::Index hi = std::max(ta, tb + s);
    double acc = 0.0;
    if (metric == Metric::manhattan) {
      for (Eigen::Index t = lo; t < hi; ++t)
        acc += static_cast<double>((row_of(a, t) - row_of(b, t - s)).abs().sum());
    } else {
      for (Eigen::Index t = lo; t < hi; ++t)
        acc += static_cast<double>((row_of(a, t) - row_of(b, t - s)).square().sum());
    }
    const double pixels = static_cast<double>((hi - lo) * n_bins);
    const double value =
        (metric == Metric::euclidean ? std::sqrt(acc) : acc) / pixels;
    best = std::min(best, value);
  }
  return best;
}

DistanceMatrix pairwise_matrix(const std::vector<Spectrogram>& specs,
                               const std::vector<std::string>& ids,
                               Metric metric, double max_shift_ms,
                               int n_threads) {
  const Eigen::Index n = static_cast<Eigen::Index>(specs.size());
  if (n < 2) raise(ErrorCode::invalid_argument, "need at least two calls");
  if (ids.size() != specs.size())
    raise(ErrorCode::invalid_argument, "ids do not match spectrograms");

  DistanceMatrix dm;
  dm.values = Eigen::MatrixXd::Zero(n, n);
  dm.call_ids = ids;
  dm.metric_tag =
      std::string(metric_name(metric)) + (specs[0].is_log ? "_log" : "_mag");

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(
      static_cast<std::int64_t>(pairs.size()),
      [&](std::int64_t p) {
        const auto [i, j] = pairs[static_cast<std::size_t>(p)];
        const double d = spec_distance(specs[static_cast<std::size_t>(i)],
                                       specs[static_cast<std::size_t>(j)],
                                       metric, max_shift_ms);
        dm.values(i, j) = d;
        dm.values(j, i) = d;
      },
      n_threads);
  return dm;
}

void write_distance_csv(const std::string& path, const DistanceMatrix& dm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << "# metric=" << dm.metric_tag
      << " representation=" << dm.representation_tag << '\n';
  out << "id";
  for (const auto& id : dm.call_ids) out << ',' << id;
  out << '\n';
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    line.str("");
    line << dm.call_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < dm.size(); ++j) line << ',' << dm.values(i, j);
    out << line.str() << '\n';
  }
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

DistanceMatrix read_distance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open '" + path + "'");
  DistanceMatrix dm;
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string token;
      while (meta >> token) {
        if (token.rfind("metric=", 0) == 0) dm.metric_tag = token.substr(7);
        if (token.rfind("representation=", 0) == 0)
          dm.representation_tag = token.substr(15);
      }
      continue;
    }
    std::istringstream fields(line);
    std::string field;
    if (!have_header) {
      std::getline(fields, field, ',');  // "id"
      while (std::getline(fields, field, ',')) dm.call_ids.push_back(field);
      have_header = true;
      continue;
    }
    std::getline(fields, field, ',');  // row id
    std::vector<double> row;
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (row.size() != dm.call_ids.size())
      raise(ErrorCode::bad_format, "ragged distance CSV row");
    rows.push_back(std::move(row));
  }
  if (!have_header || rows.size() != dm.call_ids.size())
    raise(ErrorCode::bad_format, "distance CSV shape mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  dm.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      dm.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return dm;
}

void write_distance_binary(const std::string& path, const DistanceMatrix& dm) {
  Spectrogram container;
  container.values = dm.values.cast<float>();
  container.frame_hop = 0;
  container.frame_size = 0;
  write_spectrogram_binary(path, container);
}

}  // namespace callkit
