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

// Per-observation category probability and its derivatives with respect to
// the two linear predictors that bound the observed category.

#include <cmath>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "sensilogit/model.hpp"
#include "sensilogit/stats.hpp"

namespace sensilogit::detail {

/// Linear predictors of the cutpoints just above (k = y) and below
/// (k = y - 1) the observed category y, without the random intercept.
struct ObsPredictor {
  double upper = 0.0;
  double lower = 0.0;
  bool has_upper = false;
  bool has_lower = false;
};

struct ObsTerms {
  double logp = 0.0;
  double d_upper = 0.0;  // d log pi / d eta_upper
  double d_lower = 0.0;  // d log pi / d eta_lower
  double d2_shift = 0.0; // d^2 log pi / du^2
  bool floored = false;
};

inline double linear_predictor(const ParamLayout& layout, const Eigen::VectorXd& params,
                               std::span<const std::uint32_t> levels, std::size_t k) {
  double eta = params(static_cast<Eigen::Index>(layout.alpha(k)));
  for (std::size_t t = 0; t < levels.size(); ++t) {
    if (auto idx = layout.slope(t, k, levels[t])) eta += params(static_cast<Eigen::Index>(*idx));
  }
  return eta;
}

inline ObsPredictor predictor(const ParamLayout& layout, const Eigen::VectorXd& params,
                              std::span<const std::uint32_t> levels, int response) {
  ObsPredictor p;
  const auto y = static_cast<std::size_t>(response);
  if (y <= layout.cutpoints()) {
    p.has_upper = true;
    p.upper = linear_predictor(layout, params, levels, y - 1);
  }
  if (y >= 2) {
    p.has_lower = true;
    p.lower = linear_predictor(layout, params, levels, y - 2);
  }
  return p;
}

/// Evaluates log pi(y | eta + u). With `curvature` set, also fills d2_shift.
inline ObsTerms evaluate(const ObsPredictor& p, double u, bool curvature = false) {
  double th_up = 1.0, c_up = 0.0, th_lo = 0.0, c_lo = 1.0;
  if (p.has_upper) {
    th_up = stats::logistic(p.upper + u);
    c_up = stats::logistic(-(p.upper + u));
  }
  if (p.has_lower) {
    th_lo = stats::logistic(p.lower + u);
    c_lo = stats::logistic(-(p.lower + u));
  }
  // Difference the smaller tails to limit cancellation.
  const double prob = th_lo > 0.5 ? c_lo - c_up : th_up - th_lo;
  ObsTerms out;
  if (!(prob > kProbabilityFloor)) {
    out.logp = std::log(kProbabilityFloor);
    out.floored = true;
    return out;
  }
  const double a_up = th_up * c_up;
  const double a_lo = th_lo * c_lo;
  out.logp = std::log(prob);
  out.d_upper = a_up / prob;
  out.d_lower = -a_lo / prob;
  if (curvature) {
    const double d1 = out.d_upper + out.d_lower;
    out.d2_shift = (a_up * (1.0 - 2.0 * th_up) - a_lo * (1.0 - 2.0 * th_lo)) / prob - d1 * d1;
  }
  return out;
}

/// Adds weight * d log pi / d eta into the parameter gradient.
inline void accumulate_gradient(const ParamLayout& layout, std::span<const std::uint32_t> levels,
                                int response, double d_upper, double d_lower,
                                Eigen::VectorXd& grad) {
  const auto y = static_cast<std::size_t>(response);
  auto add = [&](std::size_t k, double d) {
    grad(static_cast<Eigen::Index>(layout.alpha(k))) += d;
    for (std::size_t t = 0; t < levels.size(); ++t) {
      if (auto idx = layout.slope(t, k, levels[t])) grad(static_cast<Eigen::Index>(*idx)) += d;
    }
  };
  if (y <= layout.cutpoints()) add(y - 1, d_upper);
  if (y >= 2) add(y - 2, d_lower);
}

}  // namespace sensilogit::detail
