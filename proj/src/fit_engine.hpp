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
#include <vector>

#include <Eigen/Dense>

#include "sensilogit/model.hpp"

namespace sensilogit::detail {

/// Log-likelihood in natural packing; writes the gradient when grad != null.
using LoglikFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct Problem {
  const ModelSpec* spec = nullptr;
  LoglikFn loglik;
  Eigen::VectorXd start;
  std::vector<std::size_t> fixed;
};

struct Solution {
  Eigen::VectorXd params;
  double loglik = 0.0;
  Convergence convergence;
  Eigen::MatrixXd vcov;
  bool vcov_valid = false;
};

/// BFGS (ordered-cutpoint reparameterization for all-proportional specs),
/// then Newton polishing with a finite-difference Hessian of the analytic
/// gradient; the covariance is the inverse observed information.
Solution maximize(const Problem& problem, const FitOptions& opts);

/// Fills spec/params/loglik/convergence fields of a FittedModel and checks
/// the separation guard. A large slope whose log-likelihood does not drop
/// when pushed to the guard is treated as unbounded and capped there.
FittedModel to_fitted(const ModelSpec& spec, const ModelData& data, Solution sol,
                      std::vector<std::size_t> fixed, const LoglikFn& loglik);

}  // namespace sensilogit::detail
