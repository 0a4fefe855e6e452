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

// Independent reference computations and shared fixtures for the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sensilogit/design.hpp"
#include "sensilogit/model.hpp"
#include "sensilogit/simulate.hpp"

namespace oracle {

inline double chi2_sf(double x, double df) {
  return x <= 0.0 ? 1.0 : boost::math::gamma_q(0.5 * df, 0.5 * x);
}

inline double normal_two_sided(double z) {
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z)));
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Category probability by direct evaluation of the cumulative logits.
inline double category_prob(const sensilogit::ModelSpec& spec, const Eigen::VectorXd& params,
                            const std::vector<std::size_t>& levels, int y, double u) {
  const sensilogit::ParamLayout layout(spec);
  auto cum = [&](int k) {  // P(Y <= k), k = 0..J
    if (k <= 0) return 0.0;
    if (k >= spec.categories) return 1.0;
    double eta = params(static_cast<Eigen::Index>(k - 1)) + u;
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
      const auto idx = layout.slope(t, static_cast<std::size_t>(k - 1), levels[t]);
      if (idx) eta += params(static_cast<Eigen::Index>(*idx));
    }
    return expit(eta);
  };
  return cum(y) - cum(y - 1);
}

/// log of the integral over u of prod_obs pi(y | u) N(u; 0, sigma^2), by the
/// trapezoid rule on [-12 sigma, 12 sigma] around 0 and around the mode.
inline double trapezoid_marginal(const sensilogit::ModelSpec& spec, const Eigen::VectorXd& params,
                                 const std::vector<std::vector<std::size_t>>& levels,
                                 const std::vector<int>& responses, double sigma,
                                 int points = 100000) {
  auto log_integrand = [&](double u) {
    double s = -0.5 * u * u / (sigma * sigma) - std::log(sigma * std::sqrt(2.0 * M_PI));
    for (std::size_t i = 0; i < responses.size(); ++i) {
      s += std::log(category_prob(spec, params, levels[i], responses[i], u));
    }
    return s;
  };
  const double lo = -12.0 * sigma - 10.0;
  const double hi = 12.0 * sigma + 10.0;
  const double h = (hi - lo) / points;
  std::vector<double> v(static_cast<std::size_t>(points) + 1);
  for (int i = 0; i <= points; ++i) v[static_cast<std::size_t>(i)] = log_integrand(lo + i * h);
  const double m = *std::max_element(v.begin(), v.end());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
    sum += w * std::exp(v[i] - m);
  }
  return m + std::log(static_cast<double>(sum) * h);
}

inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

/// Spearman correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Every panellist tastes all `formulations` in index order.
inline std::vector<sensilogit::design::Serving> complete_schedule(int panellists, int formulations) {
  std::vector<sensilogit::design::Serving> s;
  for (int p = 0; p < panellists; ++p) {
    sensilogit::design::Serving v;
    v.panellist = p;
    for (int f = 0; f < formulations; ++f) v.order.push_back(f);
    s.push_back(v);
  }
  return s;
}

// Reference 13-formulation, 5-attribute non-proportional mixed fit. Rows are
// cutpoints labelled 2..5; attribute columns are body, flavour, sweetness,
// overall impression (aroma is the reference).
inline const std::vector<double> kAlpha{-1.92, 0.04, 2.02, 4.29};
inline const std::vector<std::vector<double>> kBeta{
    {-1.36, -0.61, -1.22, -0.50, -1.78, -0.21, -1.75, -1.60, -2.28, -1.93, -3.28, -2.31},
    {-0.84, -0.75, -1.84, -0.92, -1.96, 0.03, -1.58, -1.45, -1.16, -1.65, -1.80, -2.00},
    {-1.08, -1.05, -1.94, -0.99, -2.25, 0.24, -1.84, -1.65, -1.26, -1.75, -1.88, -2.09},
    {-0.97, -0.94, -1.66, -0.87, -2.44, -0.61, -1.23, -1.27, -0.87, -1.17, -0.91, -1.91}};
inline const std::vector<std::vector<double>> kDelta{{-0.05, -0.12, 0.15, 0.81},
                                                     {-0.26, -0.41, -0.42, 0.23},
                                                     {0.81, -0.38, -0.52, -0.03},
                                                     {0.35, -0.72, -0.84, -0.19}};
inline constexpr double kSigma = 1.89;

inline const std::vector<std::string> kAttributes{"body", "flavour", "sweetness", "overall",
                                                  "aroma"};

/// Reference P(Y >= 4) by attribute, F1..F13.
inline const std::vector<std::pair<std::string, std::vector<double>>> kAcceptance{
    {"aroma", {.23, .47, .46, .67, .44, .74, .19, .65, .61, .51, .63, .67, .71}},
    {"body", {.11, .28, .27, .48, .26, .56, .09, .46, .41, .32, .43, .46, .52}},
    {"sweetness", {.33, .60, .59, .78, .58, .83, .29, .76, .73, .64, .75, .77, .80}},
    {"flavour", {.31, .57, .55, .75, .54, .80, .26, .73, .69, .61, .71, .74, .78}},
    {"overall", {.23, .48, .47, .68, .45, .74, .19, .66, .62, .52, .64, .67, .72}}};

inline sensilogit::FittedModel reference_fit(double sigma = kSigma) {
  using namespace sensilogit;
  ModelSpec spec;
  spec.categories = 5;
  spec.random_intercept = true;
  FactorTerm f;
  f.factor = Factor::formulation;
  for (int t = 1; t <= 13; ++t) f.levels.push_back("F" + std::to_string(t));
  f.reference = 0;
  f.odds = OddsStructure::non_proportional;
  FactorTerm a;
  a.factor = Factor::attribute;
  a.levels = kAttributes;
  a.reference = 4;
  a.odds = OddsStructure::non_proportional;
  spec.terms = {f, a};
  const ParamLayout layout(spec);
  FittedModel fit;
  fit.spec = spec;
  fit.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < 4; ++k) {
    fit.params(static_cast<Eigen::Index>(layout.alpha(k))) = kAlpha[k];
    for (std::size_t t = 1; t < 13; ++t) {
      fit.params(static_cast<Eigen::Index>(*layout.slope(0, k, t))) = kBeta[k][t - 1];
    }
    for (std::size_t l = 0; l < 4; ++l) {
      fit.params(static_cast<Eigen::Index>(*layout.slope(1, k, l))) = kDelta[k][l];
    }
  }
  fit.params(static_cast<Eigen::Index>(*layout.log_sigma())) = std::log(sigma);
  fit.vcov = Eigen::MatrixXd::Constant(fit.params.size(), fit.params.size(), std::nan(""));
  return fit;
}

}  // namespace oracle
