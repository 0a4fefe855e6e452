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

#include "sensilogit/mixed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fit_engine.hpp"
#include "likelihood_kernel.hpp"
#include "sensilogit/error.hpp"
#include "sensilogit/stats.hpp"

namespace sensilogit {

QuadratureRule gauss_hermite(int order, bool adaptive) {
  if (order < 1) throw_usage("quadrature order must be >= 1");
  const int n = order;
  QuadratureRule rule;
  rule.order = order;
  rule.adaptive = adaptive;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  // Newton iteration on the orthonormal Hermite recurrence, roots found from
  // the largest down using asymptotic starting guesses.
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int its = 0; its < 100; ++its) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = z;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / (pp * pp);
  }
  std::reverse(rule.nodes.begin(), rule.nodes.end());
  std::reverse(rule.weights.begin(), rule.weights.end());
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  for (double w : rule.weights) rule.log_weights.push_back(std::log(w));
  return rule;
}

namespace {

constexpr double kMinLogSigma = -30.0;

struct MarginalWork {
  std::vector<detail::ObsPredictor> preds;
  std::vector<double> node_terms;
  std::vector<double> d_up;
  std::vector<double> d_lo;
};

// Log of the integrand without the prior: sum_obs log pi(y | u) plus its
// first two derivatives in u.
struct PanelShape {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

PanelShape panel_shape(const std::vector<detail::ObsPredictor>& preds, std::size_t begin,
                       std::size_t end, double u) {
  PanelShape s;
  for (std::size_t i = begin; i < end; ++i) {
    const auto t = detail::evaluate(preds[i], u, true);
    s.value += t.logp;
    s.d1 += t.d_upper + t.d_lower;
    s.d2 += t.d2_shift;
  }
  return s;
}

double marginal(const ModelSpec& spec, const Eigen::VectorXd& params, const ModelData& data,
                const QuadratureRule& rule, Eigen::VectorXd* grad, MarginalLogLik* info) {
  const ParamLayout layout(spec);
  if (!layout.log_sigma()) throw_usage("marginal likelihood needs a random-intercept model");
  if (static_cast<std::size_t>(params.size()) != layout.size()) {
    throw_usage("dimension mismatch: " + std::to_string(params.size()) +
                " parameters given, model has " + std::to_string(layout.size()));
  }
  if (data.n_terms() != spec.terms.size() || data.categories() != spec.categories) {
    throw_usage("dimension mismatch between model and encoded data");
  }
  const auto ls_index = static_cast<Eigen::Index>(*layout.log_sigma());
  const double raw_log_sigma = params(ls_index);
  if (std::isnan(raw_log_sigma)) throw_numerical("log sigma_u is NaN");
  const bool clamped = raw_log_sigma < kMinLogSigma;
  const double log_sigma = clamped ? kMinLogSigma : raw_log_sigma;
  const double sigma = std::exp(log_sigma);
  const double inv_var = 1.0 / (sigma * sigma);
  const double log_norm = -log_sigma - 0.5 * std::log(2.0 * std::numbers::pi);

  MarginalWork work;
  work.preds.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    work.preds[i] = detail::predictor(layout, params, data.levels(i), data.response(i));
  }
  const auto order = static_cast<std::size_t>(rule.order);
  work.node_terms.resize(order);
  if (grad) grad->setZero(params.size());

  stats::CompensatedSum total;
  for (std::size_t p = 0; p < data.panels(); ++p) {
    const std::size_t begin = data.panel_begin(p);
    const std::size_t end = data.panel_end(p);
    const std::size_t n_obs = end - begin;

    double mu = 0.0;
    double scale = sigma;
    if (rule.adaptive) {
      double u = 0.0;
      PanelShape s = panel_shape(work.preds, begin, end, u);
      bool ok = false;
      double h = s.value - 0.5 * u * u * inv_var;
      for (int it = 0; it < 20; ++it) {
        const double d1 = s.d1 - u * inv_var;
        const double d2 = s.d2 - inv_var;
        if (!(d2 < 0.0) || !std::isfinite(d1)) break;
        double step = -d1 / d2;
        bool moved = false;
        for (int half = 0; half < 30; ++half) {
          const double cand = u + step;
          const PanelShape sc = panel_shape(work.preds, begin, end, cand);
          const double hc = sc.value - 0.5 * cand * cand * inv_var;
          if (hc >= h - 1e-12 * (1.0 + std::abs(h))) {
            u = cand;
            s = sc;
            h = hc;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved || std::abs(step) <= 1e-10 * (sigma + std::abs(u))) break;
      }
      const double d1 = s.d1 - u * inv_var;
      const double d2 = s.d2 - inv_var;
      // Converged when the score is negligible on the curvature scale.
      ok = d2 < 0.0 && std::isfinite(d2) && std::abs(d1) <= 1e-6 * std::sqrt(-d2);
      if (ok) {
        mu = u;
        scale = 1.0 / std::sqrt(-d2);
      } else if (info) {
        ++info->fallbacks;
      }
    }

    const double log_jac = std::log(std::sqrt(2.0) * scale);
    if (grad) {
      work.d_up.assign(n_obs * order, 0.0);
      work.d_lo.assign(n_obs * order, 0.0);
    }
    for (std::size_t k = 0; k < order; ++k) {
      const double x = rule.nodes[k];
      const double u = mu + std::sqrt(2.0) * scale * x;
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto t = detail::evaluate(work.preds[i], u);
        sum += t.logp;
        if (grad) {
          work.d_up[(i - begin) * order + k] = t.d_upper;
          work.d_lo[(i - begin) * order + k] = t.d_lower;
        }
      }
      work.node_terms[k] =
          rule.log_weights[k] + x * x + log_jac + sum + log_norm - 0.5 * u * u * inv_var;
    }
    const double log_li = stats::log_sum_exp(work.node_terms);
    if (!std::isfinite(log_li)) throw_numerical("non-finite marginal likelihood integrand");
    total.add(log_li);

    if (grad) {
      double g_log_sigma = 0.0;
      for (std::size_t k = 0; k < order; ++k) {
        const double omega = std::exp(work.node_terms[k] - log_li);
        const double u = mu + std::sqrt(2.0) * scale * rule.nodes[k];
        g_log_sigma += omega * (-1.0 + u * u * inv_var);
        work.node_terms[k] = omega;
      }
      for (std::size_t i = begin; i < end; ++i) {
        double du = 0.0;
        double dl = 0.0;
        for (std::size_t k = 0; k < order; ++k) {
          du += work.node_terms[k] * work.d_up[(i - begin) * order + k];
          dl += work.node_terms[k] * work.d_lo[(i - begin) * order + k];
        }
        detail::accumulate_gradient(layout, data.levels(i), data.response(i), du, dl, *grad);
      }
      if (!clamped) (*grad)(ls_index) += g_log_sigma;
    }
  }
  if (info) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (detail::evaluate(work.preds[i], 0.0).floored) ++info->floored;
    }
  }
  return total.value();
}

}  // namespace

MarginalLogLik marginal_loglik(const ModelSpec& spec, const Eigen::VectorXd& params,
                               const ModelData& data, const QuadratureRule& rule) {
  MarginalLogLik out;
  out.value = marginal(spec, params, data, rule, nullptr, &out);
  return out;
}

Eigen::VectorXd marginal_gradient(const ModelSpec& spec, const Eigen::VectorXd& params,
                                  const ModelData& data, const QuadratureRule& rule) {
  Eigen::VectorXd grad;
  marginal(spec, params, data, rule, &grad, nullptr);
  return grad;
}

FittedModel fit_mixed(const ModelSpec& spec, const ModelData& data, const FitOptions& opts) {
  spec.validate();
  if (!spec.random_intercept) throw_usage("fit_mixed: spec has no random intercept");
  for (std::size_t p = 0; p < data.panels(); ++p) {
    if (data.panel_end(p) == data.panel_begin(p)) throw_data("panellist without observations");
  }
  const ParamLayout layout(spec);
  const auto ls = *layout.log_sigma();
  Eigen::VectorXd start;
  if (opts.start) {
    start = *opts.start;
    if (static_cast<std::size_t>(start.size()) != layout.size()) {
      throw_usage("dimension mismatch in starting values");
    }
  } else {
    const ModelSpec fixed_spec = with_random_intercept(spec, false);
    FitOptions fixed_opts;
    fixed_opts.compute_vcov = false;
    fixed_opts.max_iter = opts.max_iter;
    const FittedModel fixed = fit_fixed(fixed_spec, data, fixed_opts);
    start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
    start.head(fixed.params.size()) = fixed.params;
    start(static_cast<Eigen::Index>(ls)) = 0.0;
  }
  std::vector<std::size_t> fixed_idx;
  if (opts.fixed_log_sigma) {
    start(static_cast<Eigen::Index>(ls)) = *opts.fixed_log_sigma;
    fixed_idx.push_back(ls);
  }
  const QuadratureRule rule = gauss_hermite(opts.quad_order, true);
  detail::Problem problem;
  problem.spec = &spec;
  problem.start = start;
  problem.fixed = fixed_idx;
  problem.loglik = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    return marginal(spec, x, data, rule, grad, nullptr);
  };
  auto sol = detail::maximize(problem, opts);
  const auto lsi = static_cast<Eigen::Index>(ls);
  if (!opts.fixed_log_sigma && sol.convergence.status != FitStatus::converged &&
      std::exp(sol.params(lsi)) < kSigmaBoundary) {
    // The log sigma_u score vanishes as sigma_u -> 0; judge convergence on
    // the remaining parameters with sigma_u held at the boundary estimate.
    detail::Problem held = problem;
    held.start = sol.params;
    held.fixed = {ls};
    const int used = sol.convergence.iterations;
    sol = detail::maximize(held, opts);
    sol.convergence.iterations += used;
  }
  FittedModel fit = detail::to_fitted(spec, data, std::move(sol), fixed_idx, problem.loglik);
  const auto info = marginal_loglik(spec, fit.params, data, rule);
  fit.loglik = info.value;
  fit.diagnostics.floored = info.floored;
  if (info.fallbacks > 0) {
    fit.diagnostics.warnings.push_back(std::to_string(info.fallbacks) +
                                       " panellists used the non-adaptive rule");
  }
  if (!opts.fixed_log_sigma && fit.sigma_u() < kSigmaBoundary) {
    fit.diagnostics.sigma_boundary = true;
    fit.diagnostics.warnings.push_back("sigma_u at the lower boundary");
    const auto i = static_cast<Eigen::Index>(ls);
    fit.vcov.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    fit.vcov.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

FittedModel fit_model(const ModelSpec& spec, const ModelData& data, const FitOptions& opts) {
  return spec.random_intercept ? fit_mixed(spec, data, opts) : fit_fixed(spec, data, opts);
}

double profile_loglik(const FittedModel& fit, const ModelData& data, double sigma,
                      const FitOptions& opts) {
  if (!fit.spec.random_intercept) throw_usage("profile likelihood needs a random intercept");
  if (!(sigma > 0.0)) throw_usage("profile sigma must be positive");
  FitOptions o = opts;
  o.start = fit.params;
  o.fixed_log_sigma = std::log(sigma);
  o.compute_vcov = false;
  return fit_mixed(fit.spec, data, o).loglik;
}

ProfileCI profile_ci_sigma(const FittedModel& fit, const ModelData& data,
                           const ProfileOptions& opts) {
  if (!fit.spec.random_intercept) throw_usage("profile CI needs a random-intercept fit");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw_usage("confidence level must be in (0,1)");
  ProfileCI ci;
  ci.level = opts.level;
  ci.estimate = fit.sigma_u();
  const double drop = 0.5 * stats::chi2_quantile(opts.level, 1.0);
  const double top = fit.loglik;
  std::vector<ProfilePoint> trace{{ci.estimate, top}};
  auto deficit = [&](double sigma) {
    const double ll = profile_loglik(fit, data, sigma, opts.fit);
    trace.push_back({sigma, ll});
    return top - ll;
  };
  auto bisect = [&](double inside, double outside) {
    while (std::abs(outside - inside) > opts.tolerance) {
      const double mid = 0.5 * (inside + outside);
      if (deficit(mid) <= drop) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return 0.5 * (inside + outside);
  };

  const double lo = opts.sigma_min;
  if (ci.estimate <= lo || deficit(lo) <= drop) {
    ci.lower = lo;
    ci.lower_open = true;
  } else {
    ci.lower = bisect(ci.estimate, lo);
  }
  const double hi = std::max(10.0 * ci.estimate, 1.0);
  if (deficit(hi) <= drop) {
    ci.upper = hi;
    ci.upper_open = true;
  } else {
    ci.upper = bisect(std::max(ci.estimate, lo), hi);
  }
  ci.lower = std::min(ci.lower, ci.estimate);
  ci.upper = std::max(ci.upper, ci.estimate);
  ci.contains_zero = ci.lower_open;

  for (int i = 1; i <= opts.trace_points; ++i) {
    const double s = ci.lower + (ci.upper - ci.lower) * i / (opts.trace_points + 1.0);
    deficit(s);
  }
  std::sort(trace.begin(), trace.end(),
            [](const ProfilePoint& a, const ProfilePoint& b) { return a.sigma < b.sigma; });
  ci.trace = std::move(trace);
  return ci;
}

}  // namespace sensilogit
