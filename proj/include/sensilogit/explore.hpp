// Copyright 2026 The sensilogit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/dataset.hpp"

namespace sensilogit {

struct CAResult {
  /// Principal coordinates, one row per table row / column, `axes` columns.
  Eigen::MatrixXd row_coords;
  Eigen::MatrixXd col_coords;
  /// All singular values of the standardized residual matrix, descending.
  std::vector<double> singular_values;
  /// Share of total inertia on each retained axis (0 when the inertia is 0).
  std::vector<double> inertia_share;
  double total_inertia = 0.0;
  double n = 0.0;
};

/// Simple correspondence analysis of a count table, retaining `axes` axes.
/// Axis signs make the first row point with a non-negligible coordinate
/// non-negative.
CAResult correspondence_analysis(const Eigen::MatrixXd& table, int axes = 2);

struct McaResult {
  CAResult ca;
  /// One entry per retained indicator column.
  std::vector<std::string> labels;
  /// "formulation", "attribute" or "category".
  std::vector<std::string> types;
  std::vector<std::string> warnings;
};

/// CA of the indicator matrix with one row per observation and columns for
/// formulation levels, attribute levels and response categories. Columns
/// that are never used are dropped with a warning.
McaResult mca_coordinates(const OrdinalDataset& ds, int axes = 2);

/// label,axis1,axis2,type
void write_coords_csv(std::ostream& out, const McaResult& mca);

}  // namespace sensilogit
