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

#include "sensilogit/inference.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "sensilogit/error.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/stats.hpp"

namespace sensilogit {
namespace {

std::string describe(const ModelSpec& spec) {
  std::string out = spec.random_intercept ? "mixed " : "fixed ";
  if (spec.terms.empty()) return out + "intercept-only";
  out += spec.all_proportional() ? "proportional" : "non-proportional";
  out += " [";
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    if (i) out += " + ";
    out += to_string(spec.terms[i].factor);
  }
  return out + "]";
}

}  // namespace

std::string nesting_violation(const FittedModel& null, const FittedModel& alt) {
  if (null.data_fingerprint != alt.data_fingerprint || null.n_obs != alt.n_obs) {
    return "fits use different data";
  }
  const ModelSpec& a = null.spec;
  const ModelSpec& b = alt.spec;
  if (a.categories != b.categories) return "different response scales";
  if (a.random_intercept && !b.random_intercept) {
    return "null has a random intercept the alternative lacks";
  }
  for (const auto& t : a.terms) {
    const auto idx = b.term_index(t.factor);
    if (!idx) return "null term " + to_string(t.factor) + " missing from alternative";
    const auto& u = b.terms[*idx];
    if (t.levels != u.levels || t.reference != u.reference) {
      return "term " + to_string(t.factor) + " coded differently";
    }
    if (t.odds == OddsStructure::non_proportional && u.odds == OddsStructure::proportional) {
      return "term " + to_string(t.factor) + " is less constrained in the null";
    }
  }
  if (null.n_params() > alt.n_params()) return "null has more parameters";
  return {};
}

TestResult lrt(const FittedModel& null, const FittedModel& alt) {
  if (const auto why = nesting_violation(null, alt); !why.empty()) {
    throw_usage("models are not nested: " + why);
  }
  TestResult r;
  r.null_desc = describe(null.spec);
  r.alt_desc = describe(alt.spec);
  double lambda = -2.0 * (null.loglik - alt.loglik);
  if (lambda < -1e-6) {
    throw_numerical("likelihood-ratio statistic " + std::to_string(lambda) +
                    " < 0: the alternative fit is worse than the null (optimizer failure)");
  }
  if (lambda < 0.0) lambda = 0.0;
  r.statistic = lambda;
  r.df = static_cast<double>(alt.n_params() - null.n_params());
  r.reference = "chi2(" + std::to_string(alt.n_params() - null.n_params()) + ")";
  r.p_value = (r.df == 0.0 || lambda == 0.0) ? 1.0 : stats::chi2_sf(lambda, r.df);
  if (!null.spec.random_intercept && alt.spec.random_intercept && r.df == 1.0) {
    r.p_boundary = stats::chi2_mixture_01_sf(lambda);
  }
  return r;
}

ModelComparison compare_proportionality(const OrdinalDataset& ds, const ModelSpec& base,
                                        const FitOptions& opts) {
  if (base.categories < 3) throw_usage("proportionality vacuous for binary response");
  if (base.terms.empty()) throw_usage("proportionality test needs at least one term");
  const ModelSpec null_spec = with_odds(base, OddsStructure::proportional);
  const ModelSpec alt_spec = with_odds(base, OddsStructure::non_proportional);
  const ModelData null_data(ds, null_spec);
  ModelComparison out{{}, fit_model(null_spec, null_data, opts), {}};
  if (!out.null_fit.converged()) throw_numerical("proportional (null) fit did not converge");
  // Start the larger model at the nested optimum.
  FitOptions alt_opts = opts;
  const ParamLayout nl(null_spec);
  const ParamLayout al(alt_spec);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(al.size()));
  for (std::size_t k = 0; k < nl.cutpoints(); ++k) {
    start(static_cast<Eigen::Index>(k)) = out.null_fit.params(static_cast<Eigen::Index>(k));
  }
  for (std::size_t t = 0; t < alt_spec.terms.size(); ++t) {
    for (std::size_t k = 0; k < al.cutpoints(); ++k) {
      for (std::size_t lv = 0; lv < alt_spec.terms[t].levels.size(); ++lv) {
        const auto ai = al.slope(t, k, lv);
        if (!ai) continue;
        start(static_cast<Eigen::Index>(*ai)) =
            out.null_fit.params(static_cast<Eigen::Index>(*nl.slope(t, k, lv)));
      }
    }
  }
  if (nl.log_sigma()) {
    start(static_cast<Eigen::Index>(*al.log_sigma())) =
        out.null_fit.params(static_cast<Eigen::Index>(*nl.log_sigma()));
  }
  alt_opts.start = start;
  const ModelData alt_data(ds, alt_spec);
  out.alt_fit = fit_model(alt_spec, alt_data, alt_opts);
  if (!out.alt_fit.converged()) throw_numerical("non-proportional (alternative) fit did not converge");
  out.test = lrt(out.null_fit, out.alt_fit);
  return out;
}

TestResult test_proportionality(const OrdinalDataset& ds, const ModelSpec& base,
                                const FitOptions& opts) {
  return compare_proportionality(ds, base, opts).test;
}

ModelComparison compare_covariate(const OrdinalDataset& ds, const ModelSpec& spec, Factor factor,
                                  const FitOptions& opts, const FittedModel* alt_fit) {
  const auto idx = spec.term_index(factor);
  if (!idx) throw_usage("model has no " + to_string(factor) + " term");
  const ModelSpec null_spec = without_term(spec, factor);
  ModelComparison out;
  if (alt_fit) {
    out.alt_fit = *alt_fit;
  } else {
    out.alt_fit = fit_model(spec, ModelData(ds, spec), opts);
  }
  if (!out.alt_fit.converged()) throw_numerical("full-model fit did not converge");
  FitOptions null_opts = opts;
  null_opts.start.reset();
  out.null_fit = fit_model(null_spec, ModelData(ds, null_spec), null_opts);
  if (!out.null_fit.converged()) {
    throw_numerical("fit without " + to_string(factor) + " did not converge");
  }
  out.test = lrt(out.null_fit, out.alt_fit);
  return out;
}

TestResult test_covariate(const OrdinalDataset& ds, const ModelSpec& spec, Factor factor,
                          const FitOptions& opts) {
  return compare_covariate(ds, spec, factor, opts).test;
}

WaldRow wald_test(const std::string& name, double estimate, double se) {
  WaldRow row;
  row.name = name;
  row.estimate = estimate;
  row.se = se;
  if (!(se > 0.0) || !std::isfinite(se)) {
    row.z = std::numeric_limits<double>::quiet_NaN();
    row.p_value = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.z = estimate / se;
  row.p_value = stats::normal_two_sided_p(row.z);
  return row;
}

std::vector<WaldRow> wald_tests(const FittedModel& fit) {
  if (!fit.vcov_valid) throw_numerical("covariance unavailable: observed information not positive definite");
  // Check the finite block for positive semi-definiteness.
  std::vector<Eigen::Index> finite;
  for (Eigen::Index i = 0; i < fit.vcov.rows(); ++i) {
    if (std::isfinite(fit.vcov(i, i))) finite.push_back(i);
  }
  Eigen::MatrixXd block(finite.size(), finite.size());
  for (std::size_t i = 0; i < finite.size(); ++i) {
    for (std::size_t j = 0; j < finite.size(); ++j) {
      block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fit.vcov(finite[i], finite[j]);
    }
  }
  if (block.size() > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    const double smallest = eig.eigenvalues().minCoeff();
    const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (smallest < -1e-10 * std::max(1.0, largest)) {
      throw_numerical("covariance not positive semi-definite: smallest eigenvalue " +
                      std::to_string(smallest));
    }
  }
  const ParamLayout layout(fit.spec);
  std::vector<WaldRow> rows;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double var = fit.vcov(ii, ii);
    WaldRow row = wald_test(layout.names()[i], fit.params(ii),
                            std::isfinite(var) ? std::sqrt(std::max(var, 0.0))
                                               : std::numeric_limits<double>::quiet_NaN());
    row.label = layout.labels()[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

TestResult chisq_association(const Eigen::MatrixXd& table) {
  if (table.rows() < 1 || table.cols() < 1) throw_data("empty contingency table");
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double v = table(i, j);
      if (!(v >= 0.0) || std::floor(v) != v) {
        throw_data("contingency table entries must be non-negative integers");
      }
    }
  }
  const Eigen::VectorXd rows = table.rowwise().sum();
  const Eigen::RowVectorXd cols = table.colwise().sum();
  for (Eigen::Index i = 0; i < rows.size(); ++i) {
    if (rows(i) == 0.0) throw_data("zero margin in row " + std::to_string(i + 1));
  }
  for (Eigen::Index j = 0; j < cols.size(); ++j) {
    if (cols(j) == 0.0) throw_data("zero margin in column " + std::to_string(j + 1));
  }
  const double n = rows.sum();
  stats::CompensatedSum stat;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double expected = rows(i) * cols(j) / n;
      const double diff = table(i, j) - expected;
      stat.add(diff * diff / expected);
    }
  }
  TestResult r;
  r.statistic = stat.value();
  const auto df = (table.rows() - 1) * (table.cols() - 1);
  r.df = static_cast<double>(df);
  r.reference = "chi2(" + std::to_string(df) + ")";
  r.p_value = df == 0 ? 1.0 : stats::chi2_sf(r.statistic, r.df);
  r.null_desc = "rows and columns independent";
  r.alt_desc = "association";
  return r;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 0.001) return "< 0.001";
  if (p < 0.01) return "< 0.01";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

}  // namespace sensilogit
