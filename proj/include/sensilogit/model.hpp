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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/dataset.hpp"

namespace sensilogit {

enum class Factor { formulation, attribute };
enum class OddsStructure { proportional, non_proportional };

std::string to_string(Factor factor);
std::string to_string(OddsStructure odds);

/// A dummy-coded factor entering every cumulative logit.
struct FactorTerm {
  Factor factor = Factor::formulation;
  std::vector<std::string> levels;
  std::size_t reference = 0;
  OddsStructure odds = OddsStructure::proportional;

  std::size_t contrasts() const { return levels.size() - 1; }
  /// Contrast column of a level, or nullopt for the reference level.
  std::optional<std::size_t> column(std::size_t level) const {
    if (level == reference) return std::nullopt;
    return level < reference ? level : level - 1;
  }
  bool operator==(const FactorTerm&) const = default;
};

/// Cumulative logit model structure:
///   logit P(Y <= k | x, u) = alpha_k + sum_terms slope_k(term, level) + u,
/// k = 1..J-1, with u ~ N(0, sigma_u^2) when random_intercept is set.
struct ModelSpec {
  int categories = 5;
  std::vector<FactorTerm> terms;
  bool random_intercept = false;

  /// Throws a usage error on an inconsistent structure.
  void validate() const;
  std::optional<std::size_t> term_index(Factor factor) const;
  bool all_proportional() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Builds a spec over the dataset registries with the given reference levels.
ModelSpec make_spec(const OrdinalDataset& ds, const FactorReferences& refs,
                    const std::vector<Factor>& factors, OddsStructure odds,
                    bool random_intercept);
ModelSpec without_term(const ModelSpec& spec, Factor factor);
ModelSpec with_odds(const ModelSpec& spec, OddsStructure odds);
ModelSpec with_random_intercept(const ModelSpec& spec, bool on);

/// Flat parameter packing: cutpoints alpha_1..alpha_{J-1}; then each term in
/// spec order, either one slope per contrast (proportional) or a
/// (J-1) x contrasts block stored row-major by cutpoint; then log sigma_u.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelSpec& spec);

  std::size_t size() const { return size_; }
  std::size_t cutpoints() const { return cutpoints_; }
  std::size_t alpha(std::size_t k) const { return k; }
  /// Index of term `term`'s coefficient for `level` in cutpoint k (0-based),
  /// nullopt for the reference level.
  std::optional<std::size_t> slope(std::size_t term, std::size_t k, std::size_t level) const;
  std::optional<std::size_t> log_sigma() const { return log_sigma_; }
  std::size_t term_offset(std::size_t term) const { return terms_[term].offset; }
  std::size_t term_size(std::size_t term) const { return terms_[term].size; }

  /// Stable machine names with 1-based cutpoints, e.g. "alpha[1]", "formulation[F4]",
  /// "formulation[F4|3]" (cutpoint 3), "log_sigma_u".
  const std::vector<std::string>& names() const { return names_; }
  /// Report labels that number cutpoints from 2, e.g. "alpha_3",
  /// "beta_3,4", "delta_3,1"; level subscripts are 1-based registry indices.
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  struct TermSlots {
    std::size_t offset = 0;
    std::size_t size = 0;
    std::size_t contrasts = 0;
    std::size_t reference = 0;
    bool proportional = true;
  };
  std::size_t cutpoints_ = 0;
  std::size_t size_ = 0;
  std::vector<TermSlots> terms_;
  std::optional<std::size_t> log_sigma_;
  std::vector<std::string> names_;
  std::vector<std::string> labels_;
};

/// Observations re-indexed against a spec and grouped by panellist (stable
/// within a panellist).
class ModelData {
 public:
  ModelData(const OrdinalDataset& ds, const ModelSpec& spec);

  std::size_t size() const { return responses_.size(); }
  std::size_t panels() const { return panel_start_.size() - 1; }
  std::size_t panel_begin(std::size_t p) const { return panel_start_[p]; }
  std::size_t panel_end(std::size_t p) const { return panel_start_[p + 1]; }
  int response(std::size_t i) const { return responses_[i]; }
  std::span<const std::uint32_t> levels(std::size_t i) const {
    return {levels_.data() + i * n_terms_, n_terms_};
  }
  std::size_t n_terms() const { return n_terms_; }
  int categories() const { return categories_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  const std::vector<std::size_t>& category_counts() const { return category_counts_; }

 private:
  std::vector<int> responses_;
  std::vector<std::uint32_t> levels_;
  std::vector<std::size_t> panel_start_;
  std::vector<std::size_t> category_counts_;
  std::size_t n_terms_ = 0;
  int categories_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// Floor applied to category probabilities inside the log-likelihood.
inline constexpr double kProbabilityFloor = 1e-300;

/// theta_k = P(Y <= k | levels, u), k = 1..J-1. `levels` holds one level
/// index per spec term.
std::vector<double> cumulative_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                                     std::span<const std::size_t> levels, double u = 0.0);

/// Same, from a dummy-coded row whose columns follow the spec's terms.
std::vector<double> cumulative_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                                     const Eigen::RowVectorXd& dummies, double u = 0.0);

struct CategoryProbs {
  std::vector<double> probs;
  /// Set when the cumulative probabilities decrease somewhere, which
  /// non-proportional parameters can produce; probs then contain negatives.
  bool non_monotone = false;
};

CategoryProbs category_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                             std::span<const std::size_t> levels, double u = 0.0);

struct LogLik {
  double value = 0.0;
  /// Observations whose probability hit kProbabilityFloor.
  std::size_t floored = 0;
};

/// Fixed-effect log-likelihood; any random-intercept parameter is ignored.
LogLik loglik_fixed(const ModelSpec& spec, const Eigen::VectorXd& params, const ModelData& data);
Eigen::VectorXd gradient_fixed(const ModelSpec& spec, const Eigen::VectorXd& params,
                               const ModelData& data);

/// Distinct observed covariate points with decreasing cumulative
/// probabilities at u = 0.
std::size_t count_non_monotone_points(const ModelSpec& spec, const Eigen::VectorXd& params,
                                      const ModelData& data);

enum class FitStatus { converged, max_iterations, line_search_failed };
std::string to_string(FitStatus status);

struct Convergence {
  int iterations = 0;
  /// Max-abs gradient of the log-likelihood over free parameters.
  double gradient_norm = 0.0;
  FitStatus status = FitStatus::converged;
};

struct FitDiagnostics {
  std::size_t floored = 0;
  std::size_t non_monotone_points = 0;
  bool separation = false;
  bool sigma_boundary = false;
  std::vector<std::string> warnings;
};

struct FittedModel {
  ModelSpec spec;
  Eigen::VectorXd params;
  double loglik = 0.0;
  /// Inverse observed information; NaN rows/columns for parameters whose
  /// variance is unavailable (e.g. log sigma_u at the boundary).
  Eigen::MatrixXd vcov;
  bool vcov_valid = false;
  std::size_t n_obs = 0;
  std::size_t n_panels = 0;
  std::uint64_t data_fingerprint = 0;
  Convergence convergence;
  FitDiagnostics diagnostics;
  /// Parameters held fixed during the fit (profile fits).
  std::vector<std::size_t> fixed;

  bool converged() const { return convergence.status == FitStatus::converged; }
  std::size_t n_params() const { return static_cast<std::size_t>(params.size()); }
  Eigen::VectorXd standard_errors() const;
  /// 0 without a random intercept.
  double sigma_u() const;
};

struct FitOptions {
  int max_iter = 1000;
  double grad_tol = 1e-6;
  /// Starting values in natural packing; default is empirical cutpoints with
  /// zero slopes (and sigma_u = 1 for mixed fits).
  std::optional<Eigen::VectorXd> start;
  int quad_order = 15;
  bool compute_vcov = true;
  /// Holds log sigma_u at this value (profile likelihood).
  std::optional<double> fixed_log_sigma;
};

/// Slopes beyond this magnitude are reported as separation and capped.
inline constexpr double kSlopeGuard = 30.0;

FittedModel fit_fixed(const ModelSpec& spec, const ModelData& data, const FitOptions& opts = {});

/// Empirical cumulative logits logit(P(Y <= k)), the intercept-only MLE.
Eigen::VectorXd empirical_cutpoints(const ModelData& data);

}  // namespace sensilogit
