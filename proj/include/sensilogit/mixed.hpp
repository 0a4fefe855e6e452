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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/model.hpp"

namespace sensilogit {

/// Gauss-Hermite rule for integrals of the form  int exp(-x^2) f(x) dx.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> log_weights;
  int order = 0;
  /// Recentre and rescale per panellist at the mode of the integrand.
  bool adaptive = true;
};

QuadratureRule gauss_hermite(int order, bool adaptive = true);

struct MarginalLogLik {
  double value = 0.0;
  /// Panellists where the mode search failed and the plain rule was used.
  std::size_t fallbacks = 0;
  std::size_t floored = 0;
};

/// Sum over panellists of log int prod_obs pi(y | x, u) N(u; 0, sigma_u^2) du.
MarginalLogLik marginal_loglik(const ModelSpec& spec, const Eigen::VectorXd& params,
                               const ModelData& data, const QuadratureRule& rule);

/// Gradient of the quadrature approximation with the per-panellist centring
/// held at its current value.
Eigen::VectorXd marginal_gradient(const ModelSpec& spec, const Eigen::VectorXd& params,
                                  const ModelData& data, const QuadratureRule& rule);

/// Maximum marginal likelihood for a random-intercept spec. Starts from the
/// fixed-effect fit with sigma_u = 1 unless opts.start is given.
FittedModel fit_mixed(const ModelSpec& spec, const ModelData& data, const FitOptions& opts = {});

/// fit_fixed or fit_mixed according to spec.random_intercept.
FittedModel fit_model(const ModelSpec& spec, const ModelData& data, const FitOptions& opts = {});

/// sigma_u fits below this are reported as boundary fits.
inline constexpr double kSigmaBoundary = 1e-3;

struct ProfilePoint {
  double sigma = 0.0;
  double loglik = 0.0;
};

struct ProfileCI {
  std::string parameter = "sigma_u";
  double level = 0.95;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  /// The profile never dropped by the threshold inside the search range.
  bool lower_open = false;
  bool upper_open = false;
  bool contains_zero = false;
  std::vector<ProfilePoint> trace;
};

struct ProfileOptions {
  double level = 0.95;
  double sigma_min = 1e-6;
  /// Bisection tolerance on sigma.
  double tolerance = 1e-4;
  /// Extra evenly spaced trace points between the endpoints.
  int trace_points = 11;
  FitOptions fit;
};

/// Profile log-likelihood at fixed sigma_u, re-maximized over all other
/// parameters (warm-started from `fit`).
double profile_loglik(const FittedModel& fit, const ModelData& data, double sigma,
                      const FitOptions& opts = {});

/// {sigma : 2 (logL(sigma_hat) - logL_profile(sigma)) <= chi2_1(level)}.
ProfileCI profile_ci_sigma(const FittedModel& fit, const ModelData& data,
                           const ProfileOptions& opts = {});

}  // namespace sensilogit
