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

#include <cmath>
#include <cstddef>
#include <span>

namespace sensilogit::stats {

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation in the upper tail.
double gamma_q(double a, double x);

/// Upper tail P(X > x) for X ~ chi-square(df). df may be fractional.
double chi2_sf(double x, double df);
double chi2_cdf(double x, double df);
/// Inverse of chi2_cdf, by bisection on the tail function.
double chi2_quantile(double p, double df);

/// Upper tail of the 50:50 mixture of chi-square(0) and chi-square(1).
double chi2_mixture_01_sf(double x);

double normal_cdf(double z);
double normal_quantile(double p);
/// Two-sided normal p-value, 2 * P(Z > |z|).
double normal_two_sided_p(double z);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double log_sum_exp(std::span<const double> values);

}  // namespace sensilogit::stats
