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

#include <functional>

#include <Eigen/Dense>

namespace sensilogit::optimize {

/// f(x), writing the gradient into `grad`. May return +inf or NaN outside the
/// domain; the line search backs off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

enum class Status { converged, max_iterations, line_search_failed };

struct BfgsOptions {
  int max_iter = 1000;
  /// Stop when max |grad| falls below this.
  double grad_tol = 1e-6;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  Status status = Status::converged;
};

/// BFGS with a strong-Wolfe line search.
BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opts);

/// Central differences of an analytic gradient, symmetrized.
Eigen::MatrixXd hessian_from_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad, const Eigen::VectorXd& x,
    double rel_step = 1e-5);

}  // namespace sensilogit::optimize
