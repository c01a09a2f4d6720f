// callkit/knn.hpp
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
#include <map>
#include <string>
#include <vector>

#include "callkit/distance.hpp"

namespace callkit {

struct ClassificationReport {
  double accuracy = 0.0;
  double chance_level = 0.0;  // majority-class relative frequency
  int n_calls = 0;
  std::vector<std::string> class_labels;  // sorted; indexes the confusion matrix
  Eigen::MatrixXi confusion;              // rows true class, columns predicted
  std::map<std::string, double> per_class_recall;
  std::string metric_tag;
  std::string representation_tag;
};

/// Label of the k nearest neighbours of query_index (self excluded).
/// Distance ties break toward the lower index; vote ties go to the tied
/// class holding the single nearest neighbour.
std::string knn_predict(const DistanceMatrix& dm,
                        const std::vector<std::string>& labels,
                        Eigen::Index query_index, int k = 3);

/// Leave-one-out evaluation over the whole matrix.
ClassificationReport loo_accuracy(const DistanceMatrix& dm,
                                  const std::vector<std::string>& labels,
                                  int k = 3);

std::string report_table(const ClassificationReport& report);
void write_report_json(const std::string& path,
                       const ClassificationReport& report);

}  // namespace callkit
