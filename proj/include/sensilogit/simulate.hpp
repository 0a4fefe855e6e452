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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/dataset.hpp"
#include "sensilogit/design.hpp"
#include "sensilogit/model.hpp"

namespace sensilogit {

/// Groups of 0-based formulation indices from least to most accepted, each
/// group sorted. "F3<F1=F2" gives {{2}, {0, 1}}.
std::vector<std::vector<std::size_t>> parse_pattern(const std::string& pattern);

/// Canonical text of a grouping: "F3<F1=F2".
std::string format_pattern(const std::vector<std::vector<std::size_t>>& groups);
std::string canonical_pattern(const std::string& pattern);

/// One simulation scenario: T formulations (named by the pattern) rated on
/// two attributes "A" and "B" by every panellist (complete block).
struct ScenarioSpec {
  std::string pattern;
  int panellists = 90;
  double sigma_u = 1.0;
  /// Logit-scale step between consecutive groups of the pattern.
  double gap = 1.0;
  std::vector<double> cutpoints{-2.0, -0.7, 0.7, 2.0};
  /// delta for attribute B (A is the reference).
  double attribute_effect = 0.0;
  int replicates = 200;
  std::uint64_t master_seed = 1;

  std::size_t formulations() const;
  int categories() const { return static_cast<int>(cutpoints.size()) + 1; }
  /// beta per formulation with F1 as reference; better accepted means smaller.
  std::vector<double> formulation_effects() const;
  /// True parameters in the unified proportional mixed layout
  /// (alpha, beta_F2.., delta_B, log sigma_u).
  Eigen::VectorXd true_params() const;
  void validate() const;
};

/// Deterministic generator for (seed, stream, substream); streams never
/// depend on execution order.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t substream);

OrdinalDataset simulate_dataset(const ScenarioSpec& scenario, std::size_t replicate_index);

/// Known-truth generator over an arbitrary serving schedule. Each panellist
/// rates every served formulation on every attribute.
struct SyntheticModel {
  std::vector<std::string> formulations;
  std::vector<std::string> attributes;
  std::vector<double> cutpoints;
  /// Per formulation (reference entries 0). Ignored when by-cutpoint
  /// effects are given.
  std::vector<double> formulation_effects;
  /// Optional non-proportional effects: [cutpoint][formulation].
  std::vector<std::vector<double>> formulation_effects_by_cutpoint;
  std::vector<double> attribute_effects;
  double sigma_u = 1.0;

  void validate() const;
};

OrdinalDataset simulate_schedule(const SyntheticModel& model,
                                 const std::vector<design::Serving>& schedule,
                                 std::uint64_t seed);

struct InferredOrder {
  std::string pattern;
  std::vector<std::vector<std::size_t>> groups;
  /// Acceptance score per formulation (higher is better).
  std::vector<double> scores;
  /// p-values of pairwise contrasts; pair_p[i][j] for i != j.
  std::vector<std::vector<double>> pair_p;
};

/// Orders formulations by score and collapses adjacent formulations whose
/// contrasts are all non-significant at alpha_level. Models with an
/// attribute term are compared on the attribute-mean P(Y >= threshold) at
/// u = 0 (delta method); others on the formulation slopes.
InferredOrder infer_order(const FittedModel& fit, double alpha_level = 0.05, int threshold = 4);

struct StudyOptions {
  double alpha_level = 0.05;
  int threshold = 4;
  /// 0 picks the hardware concurrency.
  int threads = 1;
  FitOptions fit;
};

/// Model index in the report arrays.
enum StudyModel : std::size_t { kUnified = 0, kAttributeA = 1, kAttributeB = 2 };

struct ReplicateRecord {
  std::size_t replicate = 0;
  /// Inferred pattern per model; empty when the fit failed.
  std::array<std::string, 3> inferred;
  std::array<std::string, 3> failure;
};

struct ScenarioReport {
  std::string pattern;
  int panellists = 0;
  std::size_t replicates = 0;
  std::array<std::size_t, 3> concordant{};
  std::array<std::size_t, 3> failures{};
  std::vector<ReplicateRecord> records;

  /// Concordant / successful fits; NaN without successful fits.
  double rate(std::size_t model) const;
  /// Failures counted as discordant; NaN without replicates.
  double sensitivity_rate(std::size_t model) const;
};

struct ConcordanceReport {
  std::vector<ScenarioReport> scenarios;

  std::size_t total_failures() const;
  std::size_t total_fits() const;
};

ConcordanceReport concordance_study(const std::vector<ScenarioSpec>& scenarios,
                                    const StudyOptions& options = {});

/// The thirteen three-formulation orderings of the reference study.
std::vector<std::string> standard_patterns();

/// scenario,N,replicates,unified,attribute_A,attribute_B,failures_*, and
/// failure-as-discordant rates.
void write_concordance_csv(std::ostream& out, const ConcordanceReport& report);

}  // namespace sensilogit
