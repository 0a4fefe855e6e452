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

#include "sensilogit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fit_engine.hpp"
#include "likelihood_kernel.hpp"
#include "sensilogit/error.hpp"
#include "sensilogit/stats.hpp"

namespace sensilogit {

std::string to_string(Factor factor) {
  return factor == Factor::formulation ? "formulation" : "attribute";
}

std::string to_string(OddsStructure odds) {
  return odds == OddsStructure::proportional ? "proportional" : "non-proportional";
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max_iterations";
    case FitStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (categories < 2) throw_usage("model needs at least 2 response categories");
  std::set<Factor> seen;
  for (const auto& t : terms) {
    if (!seen.insert(t.factor).second) {
      throw_usage("factor " + to_string(t.factor) + " appears twice in the model");
    }
    if (t.levels.size() < 2) {
      throw_usage("term " + to_string(t.factor) + " has a single level (no contrasts)");
    }
    if (t.reference >= t.levels.size()) throw_usage("reference level out of range");
  }
}

std::optional<std::size_t> ModelSpec::term_index(Factor factor) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].factor == factor) return i;
  }
  return std::nullopt;
}

bool ModelSpec::all_proportional() const {
  return std::all_of(terms.begin(), terms.end(), [](const FactorTerm& t) {
    return t.odds == OddsStructure::proportional;
  });
}

ModelSpec make_spec(const OrdinalDataset& ds, const FactorReferences& refs,
                    const std::vector<Factor>& factors, OddsStructure odds,
                    bool random_intercept) {
  ModelSpec spec;
  spec.categories = ds.scale().categories();
  spec.random_intercept = random_intercept;
  for (Factor f : factors) {
    const LevelRegistry& reg = f == Factor::formulation ? ds.formulations() : ds.attributes();
    const std::string& ref = f == Factor::formulation ? refs.formulation : refs.attribute;
    const auto idx = ref.empty() ? std::optional<std::size_t>(0) : reg.find(ref);
    if (!idx) throw_usage("unknown " + to_string(f) + " reference level \"" + ref + "\"");
    spec.terms.push_back(FactorTerm{f, reg.names(), *idx, odds});
  }
  spec.validate();
  return spec;
}

ModelSpec without_term(const ModelSpec& spec, Factor factor) {
  ModelSpec out = spec;
  const auto idx = spec.term_index(factor);
  if (!idx) throw_usage("model has no " + to_string(factor) + " term");
  out.terms.erase(out.terms.begin() + static_cast<std::ptrdiff_t>(*idx));
  return out;
}

ModelSpec with_odds(const ModelSpec& spec, OddsStructure odds) {
  ModelSpec out = spec;
  for (auto& t : out.terms) t.odds = odds;
  return out;
}

ModelSpec with_random_intercept(const ModelSpec& spec, bool on) {
  ModelSpec out = spec;
  out.random_intercept = on;
  return out;
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
  spec.validate();
  cutpoints_ = static_cast<std::size_t>(spec.categories - 1);
  for (std::size_t k = 0; k < cutpoints_; ++k) {
    names_.push_back("alpha[" + std::to_string(k + 1) + "]");
    labels_.push_back("alpha_" + std::to_string(k + 2));
  }
  std::size_t offset = cutpoints_;
  for (const auto& term : spec.terms) {
    TermSlots slots;
    slots.offset = offset;
    slots.contrasts = term.contrasts();
    slots.reference = term.reference;
    slots.proportional = term.odds == OddsStructure::proportional;
    slots.size = slots.proportional ? slots.contrasts : slots.contrasts * cutpoints_;
    const std::string fname = to_string(term.factor);
    const std::string sym = term.factor == Factor::formulation ? "beta" : "delta";
    const std::size_t rows = slots.proportional ? 1 : cutpoints_;
    for (std::size_t k = 0; k < rows; ++k) {
      for (std::size_t level = 0; level < term.levels.size(); ++level) {
        if (level == term.reference) continue;
        const std::string lvl = std::to_string(level + 1);
        if (slots.proportional) {
          names_.push_back(fname + "[" + term.levels[level] + "]");
          labels_.push_back(sym + "_" + lvl);
        } else {
          names_.push_back(fname + "[" + term.levels[level] + "|" + std::to_string(k + 1) + "]");
          labels_.push_back(sym + "_" + std::to_string(k + 2) + "," + lvl);
        }
      }
    }
    offset += slots.size;
    terms_.push_back(slots);
  }
  if (spec.random_intercept) {
    log_sigma_ = offset;
    names_.push_back("log_sigma_u");
    labels_.push_back("log_sigma_u");
    ++offset;
  }
  size_ = offset;
}

std::optional<std::size_t> ParamLayout::slope(std::size_t term, std::size_t k,
                                              std::size_t level) const {
  const TermSlots& s = terms_[term];
  if (level == s.reference) return std::nullopt;
  const std::size_t col = level < s.reference ? level : level - 1;
  return s.proportional ? s.offset + col : s.offset + k * s.contrasts + col;
}

ModelData::ModelData(const OrdinalDataset& ds, const ModelSpec& spec) {
  spec.validate();
  if (ds.scale().categories() != spec.categories) {
    throw_data("data has " + std::to_string(ds.scale().categories()) +
               " response categories, model expects " + std::to_string(spec.categories));
  }
  n_terms_ = spec.terms.size();
  categories_ = spec.categories;
  fingerprint_ = ds.fingerprint();
  // Dataset level index -> term level index, per term.
  std::vector<std::vector<std::uint32_t>> level_map;
  for (const auto& term : spec.terms) {
    const LevelRegistry& reg =
        term.factor == Factor::formulation ? ds.formulations() : ds.attributes();
    std::vector<std::uint32_t> map(reg.size());
    for (std::size_t i = 0; i < reg.size(); ++i) {
      const auto it = std::find(term.levels.begin(), term.levels.end(), reg.name(i));
      if (it == term.levels.end()) {
        throw_data(to_string(term.factor) + " level \"" + reg.name(i) + "\" is not in the model");
      }
      map[i] = static_cast<std::uint32_t>(it - term.levels.begin());
    }
    level_map.push_back(std::move(map));
  }

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& obs = ds.observations();
  std::stable_sort(order.begin(), order.end(), [&obs](std::size_t a, std::size_t b) {
    return obs[a].panellist < obs[b].panellist;
  });
  responses_.reserve(ds.size());
  levels_.reserve(ds.size() * n_terms_);
  category_counts_.assign(static_cast<std::size_t>(categories_), 0);
  std::size_t current = std::numeric_limits<std::size_t>::max();
  for (std::size_t i : order) {
    const auto& o = obs[i];
    if (o.panellist != current) {
      panel_start_.push_back(responses_.size());
      current = o.panellist;
    }
    responses_.push_back(o.response);
    ++category_counts_[static_cast<std::size_t>(o.response - 1)];
    for (std::size_t t = 0; t < n_terms_; ++t) {
      const std::size_t level =
          spec.terms[t].factor == Factor::formulation ? o.formulation : o.attribute;
      levels_.push_back(level_map[t][level]);
    }
  }
  panel_start_.push_back(responses_.size());
}

namespace {

void check_params(const ParamLayout& layout, const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != layout.size()) {
    throw_usage("dimension mismatch: " + std::to_string(params.size()) +
                " parameters given, model has " + std::to_string(layout.size()));
  }
}

void check_data(const ModelSpec& spec, const ModelData& data) {
  if (data.n_terms() != spec.terms.size() || data.categories() != spec.categories) {
    throw_usage("dimension mismatch between model and encoded data");
  }
}

std::vector<std::uint32_t> checked_levels(const ModelSpec& spec,
                                          std::span<const std::size_t> levels) {
  if (levels.size() != spec.terms.size()) {
    throw_usage("dimension mismatch: " + std::to_string(levels.size()) +
                " covariate levels given, model has " + std::to_string(spec.terms.size()) +
                " terms");
  }
  std::vector<std::uint32_t> out(levels.size());
  for (std::size_t t = 0; t < levels.size(); ++t) {
    if (levels[t] >= spec.terms[t].levels.size()) throw_usage("covariate level out of range");
    out[t] = static_cast<std::uint32_t>(levels[t]);
  }
  return out;
}

double fixed_loglik(const ModelSpec& spec, const Eigen::VectorXd& params, const ModelData& data,
                    Eigen::VectorXd* grad, std::size_t* floored) {
  const ParamLayout layout(spec);
  check_params(layout, params);
  check_data(spec, data);
  if (grad) grad->setZero(params.size());
  stats::CompensatedSum sum;
  std::size_t floor_count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto levels = data.levels(i);
    const int y = data.response(i);
    const auto pred = detail::predictor(layout, params, levels, y);
    const auto terms = detail::evaluate(pred, 0.0);
    sum.add(terms.logp);
    if (terms.floored) ++floor_count;
    if (grad) detail::accumulate_gradient(layout, levels, y, terms.d_upper, terms.d_lower, *grad);
  }
  if (floored) *floored = floor_count;
  return sum.value();
}

}  // namespace

std::vector<double> cumulative_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                                     std::span<const std::size_t> levels, double u) {
  const ParamLayout layout(spec);
  check_params(layout, params);
  const auto lv = checked_levels(spec, levels);
  std::vector<double> theta(layout.cutpoints());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    theta[k] = stats::logistic(detail::linear_predictor(layout, params, lv, k) + u);
  }
  return theta;
}

std::vector<double> cumulative_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                                     const Eigen::RowVectorXd& dummies, double u) {
  const ParamLayout layout(spec);
  check_params(layout, params);
  std::size_t columns = 0;
  for (const auto& t : spec.terms) columns += t.contrasts();
  if (static_cast<std::size_t>(dummies.size()) != columns) {
    throw_usage("dimension mismatch: design row has " + std::to_string(dummies.size()) +
                " columns, model expects " + std::to_string(columns));
  }
  std::vector<double> theta(layout.cutpoints());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double eta = params(static_cast<Eigen::Index>(layout.alpha(k)));
    std::size_t col = 0;
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
      const auto& term = spec.terms[t];
      for (std::size_t level = 0; level < term.levels.size(); ++level) {
        if (level == term.reference) continue;
        const double x = dummies(static_cast<Eigen::Index>(col++));
        if (x != 0.0) {
          eta += x * params(static_cast<Eigen::Index>(*layout.slope(t, k, level)));
        }
      }
    }
    theta[k] = stats::logistic(eta + u);
  }
  return theta;
}

CategoryProbs category_probs(const ModelSpec& spec, const Eigen::VectorXd& params,
                             std::span<const std::size_t> levels, double u) {
  const auto theta = cumulative_probs(spec, params, levels, u);
  CategoryProbs out;
  out.probs.resize(theta.size() + 1);
  double prev = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    out.probs[k] = theta[k] - prev;
    if (theta[k] < prev) out.non_monotone = true;
    prev = theta[k];
  }
  out.probs.back() = 1.0 - prev;
  return out;
}

LogLik loglik_fixed(const ModelSpec& spec, const Eigen::VectorXd& params, const ModelData& data) {
  LogLik out;
  out.value = fixed_loglik(spec, params, data, nullptr, &out.floored);
  return out;
}

Eigen::VectorXd gradient_fixed(const ModelSpec& spec, const Eigen::VectorXd& params,
                               const ModelData& data) {
  Eigen::VectorXd grad;
  fixed_loglik(spec, params, data, &grad, nullptr);
  return grad;
}

std::size_t count_non_monotone_points(const ModelSpec& spec, const Eigen::VectorXd& params,
                                      const ModelData& data) {
  if (spec.all_proportional()) return 0;
  const ParamLayout layout(spec);
  std::set<std::vector<std::uint32_t>> points;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto lv = data.levels(i);
    points.emplace(lv.begin(), lv.end());
  }
  std::size_t bad = 0;
  for (const auto& lv : points) {
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < layout.cutpoints(); ++k) {
      const double eta = detail::linear_predictor(layout, params, lv, k);
      if (eta < prev) {
        ++bad;
        break;
      }
      prev = eta;
    }
  }
  return bad;
}

Eigen::VectorXd FittedModel::standard_errors() const {
  return vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double FittedModel::sigma_u() const {
  const ParamLayout layout(spec);
  if (!layout.log_sigma()) return 0.0;
  return std::exp(params(static_cast<Eigen::Index>(*layout.log_sigma())));
}

Eigen::VectorXd empirical_cutpoints(const ModelData& data) {
  const auto& counts = data.category_counts();
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      throw_data("response category " + std::to_string(j + 1) +
                 " is never observed; collapse the scale or drop the category");
    }
  }
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(counts.size() - 1));
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < counts.size(); ++k) {
    cum += static_cast<double>(counts[k]);
    alpha(static_cast<Eigen::Index>(k)) = stats::logit(cum / n);
  }
  return alpha;
}

FittedModel fit_fixed(const ModelSpec& spec, const ModelData& data, const FitOptions& opts) {
  spec.validate();
  check_data(spec, data);
  if (spec.random_intercept) throw_usage("fit_fixed: spec has a random intercept");
  const ParamLayout layout(spec);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  if (opts.start) {
    start = *opts.start;
    check_params(layout, start);
  } else {
    start.head(static_cast<Eigen::Index>(layout.cutpoints())) = empirical_cutpoints(data);
  }
  detail::Problem problem;
  problem.spec = &spec;
  problem.start = start;
  problem.loglik = [&spec, &data](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    return fixed_loglik(spec, x, data, grad, nullptr);
  };
  auto sol = detail::maximize(problem, opts);
  FittedModel fit = detail::to_fitted(spec, data, std::move(sol), {}, problem.loglik);
  const auto ll = loglik_fixed(spec, fit.params, data);
  fit.diagnostics.floored = ll.floored;
  if (ll.floored > 0) {
    fit.diagnostics.warnings.push_back(std::to_string(ll.floored) +
                                       " observations hit the probability floor");
  }
  return fit;
}

}  // namespace sensilogit
