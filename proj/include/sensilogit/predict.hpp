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

#include "sensilogit/dataset.hpp"
#include "sensilogit/model.hpp"

namespace sensilogit {

enum class Averaging { conditional, population };

std::string to_string(Averaging averaging);
Averaging averaging_from_string(const std::string& text);

inline constexpr int kDefaultPredictionQuadOrder = 31;

/// Category probabilities at random intercept `u`. Names of factors absent
/// from the model are ignored.
std::vector<double> conditional_probs(const FittedModel& fit, const std::string& formulation,
                                      const std::string& attribute, double u = 0.0);

/// Category probabilities integrated over u ~ N(0, sigma_u^2), each cumulative
/// probability by mode-centred Gauss-Hermite of the given order. Equals the
/// conditional probabilities at u = 0 for fits without a random intercept.
std::vector<double> population_averaged_probs(const FittedModel& fit,
                                              const std::string& formulation,
                                              const std::string& attribute,
                                              int quad_order = kDefaultPredictionQuadOrder);

std::vector<double> predict_probs(const FittedModel& fit, const std::string& formulation,
                                  const std::string& attribute, Averaging averaging,
                                  int quad_order = kDefaultPredictionQuadOrder);

/// Formulation and attribute levels a fit predicts for; a model without an
/// attribute term predicts a single attribute named "all".
std::vector<std::string> formulation_levels(const FittedModel& fit);
std::vector<std::string> attribute_levels(const FittedModel& fit);

struct PredictionCell {
  std::vector<double> probs;
  /// P(Y >= threshold).
  double acceptance = 0.0;
};

struct PredictionTable {
  std::vector<std::string> formulations;
  std::vector<std::string> attributes;
  Averaging averaging = Averaging::population;
  int threshold = 4;
  int categories = 0;
  /// cells[f * attributes.size() + a].
  std::vector<PredictionCell> cells;

  const PredictionCell& at(std::size_t f, std::size_t a) const {
    return cells[f * attributes.size() + a];
  }
};

PredictionTable predict_table(const FittedModel& fit, int threshold = 4,
                              Averaging averaging = Averaging::population,
                              int quad_order = kDefaultPredictionQuadOrder);

struct AcceptanceScores {
  std::vector<std::string> formulations;
  std::vector<std::string> attributes;
  /// per_attribute[f][a] = P(Y >= threshold).
  std::vector<std::vector<double>> per_attribute;
  /// Unweighted mean over attributes.
  std::vector<double> mean;
};

AcceptanceScores acceptance_scores(const PredictionTable& table);
AcceptanceScores acceptance_score(const FittedModel& fit, int threshold = 4,
                                  Averaging averaging = Averaging::population,
                                  int quad_order = kDefaultPredictionQuadOrder);

struct RankEntry {
  std::string formulation;
  double score = 0.0;
  std::size_t rank = 0;
  /// Score equal to a neighbour's.
  bool tied = false;
};

/// Descending attribute-mean score; ties keep formulation order.
std::vector<RankEntry> rank_formulations(const AcceptanceScores& scores);
std::vector<RankEntry> rank_formulations(const FittedModel& fit, int threshold = 4,
                                         Averaging averaging = Averaging::population,
                                         int quad_order = kDefaultPredictionQuadOrder);

/// Wide layout: one block per attribute with a row per category and a
/// P(Y>=t) row, formulations as columns.
void write_prediction_csv(std::ostream& out, const PredictionTable& table);

/// Long format: formulation, attribute, category, n, observed, predicted.
void write_observed_vs_predicted(std::ostream& out, const PredictionTable& table,
                                 const OrdinalDataset& ds);

}  // namespace sensilogit
