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

#include "fit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sensilogit/error.hpp"
#include "sensilogit/optimize.hpp"

namespace sensilogit::detail {
namespace {

// Maps the optimizer's unconstrained vector z (free parameters in ascending
// natural order) to natural parameters. With ordered cutpoints, z holds
// alpha_1 followed by log-gaps log(alpha_k - alpha_{k-1}).
class Transform {
 public:
  Transform(const ModelSpec& spec, const Eigen::VectorXd& start,
            const std::vector<std::size_t>& fixed)
      : base_(start), cutpoints_(static_cast<std::size_t>(spec.categories - 1)),
        ordered_(spec.all_proportional()) {
    std::vector<bool> is_fixed(static_cast<std::size_t>(start.size()), false);
    for (auto i : fixed) is_fixed.at(i) = true;
    for (std::size_t i = 0; i < is_fixed.size(); ++i) {
      if (!is_fixed[i]) free_.push_back(i);
    }
    for (std::size_t k = 0; k < cutpoints_; ++k) {
      if (is_fixed[k]) throw_usage("cutpoints cannot be held fixed");
    }
  }

  const std::vector<std::size_t>& free() const { return free_; }
  bool ordered() const { return ordered_; }

  Eigen::VectorXd to_z(const Eigen::VectorXd& natural) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) {
      z(static_cast<Eigen::Index>(i)) = natural(static_cast<Eigen::Index>(free_[i]));
    }
    if (ordered_) {
      for (std::size_t k = 1; k < cutpoints_; ++k) {
        const double gap = natural(static_cast<Eigen::Index>(k)) -
                           natural(static_cast<Eigen::Index>(k - 1));
        if (!(gap > 0.0)) throw_usage("starting cutpoints must be strictly increasing");
        z(static_cast<Eigen::Index>(k)) = std::log(gap);
      }
    }
    return z;
  }

  Eigen::VectorXd to_natural(const Eigen::VectorXd& z) const {
    Eigen::VectorXd x = base_;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      x(static_cast<Eigen::Index>(free_[i])) = z(static_cast<Eigen::Index>(i));
    }
    if (ordered_) {
      for (std::size_t k = 1; k < cutpoints_; ++k) {
        x(static_cast<Eigen::Index>(k)) =
            x(static_cast<Eigen::Index>(k - 1)) + std::exp(z(static_cast<Eigen::Index>(k)));
      }
    }
    return x;
  }

  Eigen::VectorXd grad_z(const Eigen::VectorXd& z, const Eigen::VectorXd& g_natural) const {
    Eigen::VectorXd g = restrict(g_natural);
    if (ordered_) {
      double tail = 0.0;
      for (std::size_t k = cutpoints_; k-- > 1;) {
        tail += g_natural(static_cast<Eigen::Index>(k));
        g(static_cast<Eigen::Index>(k)) = std::exp(z(static_cast<Eigen::Index>(k))) * tail;
      }
      g(0) = tail + g_natural(0);
    }
    return g;
  }

  Eigen::VectorXd restrict(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(free_[i]));
    }
    return out;
  }

  Eigen::VectorXd expand(const Eigen::VectorXd& base, const Eigen::VectorXd& free_values) const {
    Eigen::VectorXd x = base;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      x(static_cast<Eigen::Index>(free_[i])) = free_values(static_cast<Eigen::Index>(i));
    }
    return x;
  }

  bool cutpoints_ordered(const Eigen::VectorXd& natural) const {
    if (!ordered_) return true;
    for (std::size_t k = 1; k < cutpoints_; ++k) {
      if (!(natural(static_cast<Eigen::Index>(k)) > natural(static_cast<Eigen::Index>(k - 1)))) {
        return false;
      }
    }
    return true;
  }

 private:
  Eigen::VectorXd base_;
  std::size_t cutpoints_;
  bool ordered_;
  std::vector<std::size_t> free_;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Solution maximize(const Problem& problem, const FitOptions& opts) {
  const ModelSpec& spec = *problem.spec;
  const Transform tr(spec, problem.start, problem.fixed);
  const auto n = problem.start.size();

  auto natural_grad = [&](const Eigen::VectorXd& x, double* value) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    const double v = problem.loglik(x, &g);
    if (value) *value = v;
    return g;
  };

  optimize::Objective objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const Eigen::VectorXd x = tr.to_natural(z);
    if (!x.allFinite()) {
      grad.setZero();
      return std::numeric_limits<double>::infinity();
    }
    double value = 0.0;
    const Eigen::VectorXd g = natural_grad(x, &value);
    if (!std::isfinite(value) || !g.allFinite()) {
      grad.setZero();
      return std::numeric_limits<double>::infinity();
    }
    grad = -tr.grad_z(z, g);
    return -value;
  };

  optimize::BfgsOptions bopts;
  bopts.max_iter = opts.max_iter;
  bopts.grad_tol = opts.grad_tol;
  const auto bfgs = optimize::bfgs_minimize(objective, tr.to_z(problem.start), bopts);

  Solution sol;
  Eigen::VectorXd x = tr.to_natural(bfgs.x);
  double value = 0.0;
  Eigen::VectorXd g = tr.restrict(natural_grad(x, &value));
  int iterations = bfgs.iterations;

  auto free_grad = [&](const Eigen::VectorXd& free_values) {
    return tr.restrict(natural_grad(tr.expand(x, free_values), nullptr));
  };

  // Newton polishing on the natural scale.
  for (int it = 0; it < 25 && max_abs(g) >= opts.grad_tol; ++it) {
    const Eigen::VectorXd xf = tr.restrict(x);
    const Eigen::MatrixXd hess = optimize::hessian_from_gradient(free_grad, xf);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
    if (ldlt.info() != Eigen::Success) break;
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite() || !(step.dot(g) > 0.0)) break;
    const double big = max_abs(step);
    if (big > 1.0) step /= big;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd cand = tr.expand(x, xf + step);
      if (tr.cutpoints_ordered(cand)) {
        double v_new = 0.0;
        const Eigen::VectorXd g_new = tr.restrict(natural_grad(cand, &v_new));
        if (std::isfinite(v_new) && g_new.allFinite() &&
            v_new >= value - 1e-9 * (1.0 + std::abs(value)) && max_abs(g_new) < max_abs(g)) {
          x = cand;
          value = v_new;
          g = g_new;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    ++iterations;
    if (!accepted) break;
  }

  sol.params = x;
  sol.loglik = value;
  sol.convergence.iterations = iterations;
  sol.convergence.gradient_norm = max_abs(g);
  if (sol.convergence.gradient_norm < opts.grad_tol) {
    sol.convergence.status = FitStatus::converged;
  } else if (bfgs.status == optimize::Status::line_search_failed) {
    sol.convergence.status = FitStatus::line_search_failed;
  } else {
    sol.convergence.status = FitStatus::max_iterations;
  }

  sol.vcov = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  if (!opts.compute_vcov) return sol;
  const Eigen::MatrixXd info = -optimize::hessian_from_gradient(free_grad, tr.restrict(x));
  auto scatter = [&](const Eigen::MatrixXd& cov, const std::vector<std::size_t>& keep) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      for (std::size_t j = 0; j < keep.size(); ++j) {
        sol.vcov(static_cast<Eigen::Index>(tr.free()[keep[i]]),
                 static_cast<Eigen::Index>(tr.free()[keep[j]])) =
            cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  };
  std::vector<std::size_t> keep(tr.free().size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    scatter(llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols())), keep);
    sol.vcov_valid = true;
    return sol;
  }
  // Retry without log sigma_u, whose information vanishes at the boundary.
  const ParamLayout layout(spec);
  if (const auto ls = layout.log_sigma()) {
    const auto pos = std::find(tr.free().begin(), tr.free().end(), *ls);
    if (pos != tr.free().end()) {
      const auto drop = static_cast<std::size_t>(pos - tr.free().begin());
      keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(drop));
      Eigen::MatrixXd sub(keep.size(), keep.size());
      for (std::size_t i = 0; i < keep.size(); ++i) {
        for (std::size_t j = 0; j < keep.size(); ++j) {
          sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              info(static_cast<Eigen::Index>(keep[i]), static_cast<Eigen::Index>(keep[j]));
        }
      }
      Eigen::LLT<Eigen::MatrixXd> sub_llt(sub);
      if (sub_llt.info() == Eigen::Success) {
        scatter(sub_llt.solve(Eigen::MatrixXd::Identity(sub.rows(), sub.cols())), keep);
        sol.vcov_valid = true;
      }
    }
  }
  return sol;
}

FittedModel to_fitted(const ModelSpec& spec, const ModelData& data, Solution sol,
                      std::vector<std::size_t> fixed, const LoglikFn& loglik) {
  FittedModel fit;
  fit.spec = spec;
  fit.params = std::move(sol.params);
  fit.loglik = sol.loglik;
  fit.vcov = std::move(sol.vcov);
  fit.vcov_valid = sol.vcov_valid;
  fit.n_obs = data.size();
  fit.n_panels = data.panels();
  fit.data_fingerprint = data.fingerprint();
  fit.convergence = sol.convergence;
  fit.fixed = std::move(fixed);

  const ParamLayout layout(spec);
  constexpr double kProbe = 10.0;
  for (std::size_t i = layout.cutpoints(); i < layout.size(); ++i) {
    if (layout.log_sigma() && i == *layout.log_sigma()) continue;
    const auto ix = static_cast<Eigen::Index>(i);
    const double v = fit.params(ix);
    if (std::abs(v) <= kProbe) continue;
    const double cap = v > 0 ? kSlopeGuard : -kSlopeGuard;
    bool unbounded = std::abs(v) > kSlopeGuard;
    if (!unbounded) {
      Eigen::VectorXd probe = fit.params;
      probe(ix) = cap;
      const double ll = loglik(probe, nullptr);
      unbounded = std::isfinite(ll) && ll >= fit.loglik - 1e-9 * (1.0 + std::abs(fit.loglik));
    }
    if (!unbounded) continue;
    fit.diagnostics.separation = true;
    fit.diagnostics.warnings.push_back("separation: " + layout.names()[i] + " capped at " +
                                       (v > 0 ? "+" : "-") + "30");
    fit.params(ix) = cap;
  }
  if (fit.diagnostics.separation) fit.loglik = loglik(fit.params, nullptr);
  if (!fit.vcov_valid) {
    fit.diagnostics.warnings.push_back("observed information not positive definite");
  }
  fit.diagnostics.non_monotone_points = count_non_monotone_points(spec, fit.params, data);
  if (fit.diagnostics.non_monotone_points > 0) {
    fit.diagnostics.warnings.push_back(std::to_string(fit.diagnostics.non_monotone_points) +
                                       " covariate points with negative category probabilities");
  }
  if (!fit.converged()) {
    fit.diagnostics.warnings.push_back("not converged: " + to_string(fit.convergence.status));
  }
  return fit;
}

}  // namespace sensilogit::detail
