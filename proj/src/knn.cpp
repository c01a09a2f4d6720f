// callkit/knn.cpp
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

#include "callkit/knn.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "callkit/errors.hpp"

namespace callkit {

std::string knn_predict(const DistanceMatrix& dm,
                        const std::vector<std::string>& labels,
                        Eigen::Index query_index, int k) {
  const Eigen::Index n = dm.size();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    raise(ErrorCode::invalid_argument, "labels do not match matrix");
  if (n <= k)
    raise(ErrorCode::invalid_argument, "need more than k calls for kNN");
  if (query_index < 0 || query_index >= n)
    raise(ErrorCode::invalid_argument, "query index out of range");

  std::vector<std::pair<double, Eigen::Index>> order;
  order.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != query_index) order.emplace_back(dm.values(query_index, j), j);
  std::partial_sort(order.begin(), order.begin() + k, order.end());

  // Majority vote; ties go to the class owning the single nearest neighbour.
  std::map<std::string, int> votes;
  std::map<std::string, std::pair<double, Eigen::Index>> closest;
  for (int i = 0; i < k; ++i) {
    const auto& [d, j] = order[static_cast<std::size_t>(i)];
    const std::string& label = labels[static_cast<std::size_t>(j)];
    votes[label] += 1;
    const auto it = closest.find(label);
    if (it == closest.end() || std::make_pair(d, j) < it->second)
      closest[label] = {d, j};
  }
  int max_votes = 0;
  for (const auto& [label, v] : votes) max_votes = std::max(max_votes, v);
  std::string winner;
  std::pair<double, Eigen::Index> winner_key{0.0, 0};
  for (const auto& [label, v] : votes) {
    if (v != max_votes) continue;
    if (winner.empty() || closest[label] < winner_key) {
      winner = label;
      winner_key = closest[label];
    }
  }
  return winner;
}

ClassificationReport loo_accuracy(const DistanceMatrix& dm,
                                  const std::vector<std::string>& labels,
                                  int k) {
  const Eigen::Index n = dm.size();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    raise(ErrorCode::invalid_argument, "labels do not match matrix");
  const std::set<std::string> class_set(labels.begin(), labels.end());
  if (class_set.size() < 2)
    raise(ErrorCode::invalid_argument, "need at least two classes");

  ClassificationReport report;
  report.n_calls = static_cast<int>(n);
  report.class_labels.assign(class_set.begin(), class_set.end());
  report.metric_tag = dm.metric_tag;
  report.representation_tag = dm.representation_tag;

  std::map<std::string, int> class_index;
  for (std::size_t c = 0; c < report.class_labels.size(); ++c)
    class_index[report.class_labels[c]] = static_cast<int>(c);

  const int n_classes = static_cast<int>(report.class_labels.size());
  report.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (Eigen::Index q = 0; q < n; ++q) {
    const std::string predicted = knn_predict(dm, labels, q, k);
    report.confusion(class_index[labels[static_cast<std::size_t>(q)]],
                     class_index[predicted]) += 1;
  }

  report.accuracy =
      static_cast<double>(report.confusion.trace()) / static_cast<double>(n);
  int max_count = 0;
  for (int c = 0; c < n_classes; ++c) {
    const int count = report.confusion.row(c).sum();
    max_count = std::max(max_count, count);
    report.per_class_recall[report.class_labels[static_cast<std::size_t>(c)]] =
        count > 0 ? static_cast<double>(report.confusion(c, c)) / count : 0.0;
  }
  report.chance_level = static_cast<double>(max_count) / static_cast<double>(n);
  return report;
}

std::string report_table(const ClassificationReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << "calls: " << report.n_calls
      << "  classes: " << report.class_labels.size() << '\n';
  if (!report.representation_tag.empty() || !report.metric_tag.empty())
    out << "representation: " << report.representation_tag
        << "  metric: " << report.metric_tag << '\n';
  out << "accuracy: " << 100.0 * report.accuracy << "%"
      << "  chance: " << 100.0 * report.chance_level << "%\n";
  out << "per-class recall:\n";
  for (const auto& [label, recall] : report.per_class_recall)
    out << "  " << label << ": " << 100.0 * recall << "%\n";
  return out.str();
}

void write_report_json(const std::string& path,
                       const ClassificationReport& report) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["chance_level"] = report.chance_level;
  j["n_calls"] = report.n_calls;
  j["metric_tag"] = report.metric_tag;
  j["representation_tag"] = report.representation_tag;
  j["class_labels"] = report.class_labels;
  j["per_class_recall"] = report.per_class_recall;
  std::vector<std::vector<int>> confusion;
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    std::vector<int> row;
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      row.push_back(report.confusion(r, c));
    confusion.push_back(std::move(row));
  }
  j["confusion"] = confusion;
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

}  // namespace callkit
