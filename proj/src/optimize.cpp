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

#include "sensilogit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sensilogit::optimize {
namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

struct LinePoint {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;
  Eigen::VectorXd grad;
};

bool finite(double v) { return std::isfinite(v); }

// Strong-Wolfe line search along d (Nocedal & Wright, Algorithms 3.5/3.6),
// with safeguarded quadratic interpolation in the zoom phase.
bool wolfe_search(const Objective& fn, const Eigen::VectorXd& x, double f0,
                  const Eigen::VectorXd& g0, const Eigen::VectorXd& d, double initial,
                  LinePoint& out) {
  const double slope0 = g0.dot(d);
  if (!(slope0 < 0.0)) return false;
  Eigen::VectorXd grad(x.size());
  auto eval = [&](double step) {
    LinePoint p;
    p.step = step;
    p.f = fn(x + step * d, grad);
    p.grad = grad;
    p.slope = finite(p.f) ? grad.dot(d) : std::numeric_limits<double>::quiet_NaN();
    return p;
  };

  auto zoom = [&](LinePoint lo, LinePoint hi) {
    for (int i = 0; i < 40; ++i) {
      double step = 0.5 * (lo.step + hi.step);
      if (finite(hi.f) && finite(lo.slope)) {
        const double dstep = hi.step - lo.step;
        const double denom = 2.0 * (hi.f - lo.f - lo.slope * dstep);
        if (denom > 0.0) {
          const double cand = lo.step - lo.slope * dstep * dstep / denom;
          const double a = std::min(lo.step, hi.step);
          const double b = std::max(lo.step, hi.step);
          const double margin = 0.1 * (b - a);
          if (cand > a + margin && cand < b - margin) step = cand;
        }
      }
      LinePoint p = eval(step);
      if (!finite(p.f) || p.f > f0 + kC1 * step * slope0 || p.f >= lo.f) {
        hi = p;
      } else {
        if (std::abs(p.slope) <= -kC2 * slope0) {
          out = p;
          return true;
        }
        if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = p;
      }
      if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, lo.step)) break;
    }
    // Accept a sufficient-decrease point even if curvature is unmet.
    if (lo.step > 0.0 && lo.f < f0) {
      out = lo;
      return true;
    }
    return false;
  };

  LinePoint prev;
  prev.step = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  prev.grad = g0;
  double step = initial;
  for (int i = 0; i < 60; ++i) {
    LinePoint p = eval(step);
    if (!finite(p.f)) {
      // Outside the domain: shrink toward the last good point.
      return zoom(prev, p);
    }
    if (p.f > f0 + kC1 * step * slope0 || (i > 0 && p.f >= prev.f)) return zoom(prev, p);
    if (std::abs(p.slope) <= -kC2 * slope0) {
      out = p;
      return true;
    }
    if (p.slope >= 0.0) return zoom(p, prev);
    prev = p;
    step *= 2.0;
  }
  return false;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opts) {
  const auto n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.grad.resize(n);
  res.f = fn(res.x, res.grad);
  if (!finite(res.f)) {
    res.status = Status::line_search_failed;
    return res;
  }
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int resets = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    if (max_abs(res.grad) < opts.grad_tol) {
      res.status = Status::converged;
      return res;
    }
    Eigen::VectorXd d = -hinv * res.grad;
    if (!(d.dot(res.grad) < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      d = -res.grad;
    }
    double initial = 1.0;
    if (!scaled) initial = std::min(1.0, 1.0 / std::max(1e-12, max_abs(d)));
    LinePoint p;
    if (!wolfe_search(fn, res.x, res.f, res.grad, d, initial, p)) {
      if (resets++ < 2 && scaled) {
        hinv.setIdentity();
        scaled = false;
        continue;
      }
      res.status = Status::line_search_failed;
      return res;
    }
    const Eigen::VectorXd s = p.step * d;
    const Eigen::VectorXd y = p.grad - res.grad;
    res.x += s;
    res.f = p.f;
    res.grad = p.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      // H <- (I - rho s y') H (I - rho y s') + rho s s'
      hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
              rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  res.iterations = opts.max_iter;
  res.status = max_abs(res.grad) < opts.grad_tol ? Status::converged : Status::max_iterations;
  return res;
}

Eigen::MatrixXd hessian_from_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad, const Eigen::VectorXd& x,
    double rel_step) {
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = rel_step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + step;
    const Eigen::VectorXd gp = grad(xp);
    xp(j) = x(j) - step;
    const Eigen::VectorXd gm = grad(xp);
    xp(j) = x(j);
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace sensilogit::optimize
