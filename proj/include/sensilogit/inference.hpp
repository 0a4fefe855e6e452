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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/dataset.hpp"
#include "sensilogit/model.hpp"

namespace sensilogit {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  /// Reference distribution, e.g. "chi2(3)".
  std::string reference;
  double p_value = 1.0;
  /// p-value under the 50:50 chi2(0):chi2(1) boundary mixture, set for
  /// tests of sigma_u = 0.
  std::optional<double> p_boundary;
  std::string null_desc;
  std::string alt_desc;
};

/// Empty when `null` is nested in `alt` on the same data; otherwise the reason.
std::string nesting_violation(const FittedModel& null, const FittedModel& alt);

/// Lambda = -2 (logL0 - logL1) against chi2(df), df the parameter-count
/// difference. Small negative Lambda (>= -1e-6) is clamped to 0.
TestResult lrt(const FittedModel& null, const FittedModel& alt);

struct ModelComparison {
  TestResult test;
  FittedModel null_fit;
  FittedModel alt_fit;
};

/// Proportional (null) vs non-proportional (alternative) variants of `base`.
ModelComparison compare_proportionality(const OrdinalDataset& ds, const ModelSpec& base,
                                        const FitOptions& opts = {});
TestResult test_proportionality(const OrdinalDataset& ds, const ModelSpec& base,
                                const FitOptions& opts = {});

/// `spec` without `factor` (null) vs `spec`. A pre-fitted alternative may be
/// supplied to avoid refitting it.
ModelComparison compare_covariate(const OrdinalDataset& ds, const ModelSpec& spec, Factor factor,
                                  const FitOptions& opts = {},
                                  const FittedModel* alt_fit = nullptr);
TestResult test_covariate(const OrdinalDataset& ds, const ModelSpec& spec, Factor factor,
                          const FitOptions& opts = {});

struct WaldRow {
  std::string name;
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

WaldRow wald_test(const std::string& name, double estimate, double se);
/// One row per parameter; NaN SE (no variance available) gives NaN z and p.
std::vector<WaldRow> wald_tests(const FittedModel& fit);

/// Pearson chi-square test of independence for a count table.
TestResult chisq_association(const Eigen::MatrixXd& table);

/// "< 0.001", "< 0.01", else the value to two decimals.
std::string format_p(double p);

}  // namespace sensilogit
