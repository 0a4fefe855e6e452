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

#include "sensilogit/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "sensilogit/error.hpp"
#include "sensilogit/format.hpp"
#include "sensilogit/mixed.hpp"

namespace sensilogit {
namespace {

std::vector<std::size_t> resolve_levels(const ModelSpec& spec, const std::string& formulation,
                                        const std::string& attribute) {
  std::vector<std::size_t> levels;
  for (const auto& term : spec.terms) {
    const std::string& name = term.factor == Factor::formulation ? formulation : attribute;
    const auto it = std::find(term.levels.begin(), term.levels.end(), name);
    if (it == term.levels.end()) {
      throw_usage("unknown " + to_string(term.factor) + " level '" + name + "'");
    }
    levels.push_back(static_cast<std::size_t>(it - term.levels.begin()));
  }
  return levels;
}

double log_expit(double t) { return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t)); }

double expit(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

/// E[expit(eta + u)], u ~ N(0, sigma^2), by Gauss-Hermite centred and scaled
/// at the mode of expit(e + u) phi(u), which is log-concave. The smaller of
/// the two tails is integrated so the integrand stays peaked.
double mean_expit(double eta, double sigma, const QuadratureRule& rule) {
  const double e = eta > 0.0 ? -eta : eta;
  const double prec = 1.0 / (sigma * sigma);
  double u = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double p = expit(e + u);
    const double step = ((1.0 - p) - u * prec) / (-p * (1.0 - p) - prec);
    u -= step;
    if (std::abs(step) < 1e-12 * (1.0 + std::abs(u))) break;
  }
  const double p = expit(e + u);
  const double tau = 1.0 / std::sqrt(p * (1.0 - p) + prec);
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double x = rule.nodes[q];
    const double v = u + std::sqrt(2.0) * tau * x;
    acc += std::exp(rule.log_weights[q] + x * x + log_expit(e + v) - 0.5 * v * v * prec);
  }
  const double tail = acc * tau / (sigma * std::sqrt(M_PI));
  return eta > 0.0 ? 1.0 - tail : tail;
}

/// Cumulative linear predictors alpha_k + sum of slopes at u = 0.
std::vector<double> cumulative_logits(const ModelSpec& spec, const Eigen::VectorXd& params,
                                      const std::vector<std::size_t>& levels) {
  const ParamLayout layout(spec);
  std::vector<double> eta(layout.cutpoints());
  for (std::size_t k = 0; k < eta.size(); ++k) {
    eta[k] = params(static_cast<Eigen::Index>(layout.alpha(k)));
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
      if (const auto i = layout.slope(t, k, levels[t])) eta[k] += params(static_cast<Eigen::Index>(*i));
    }
  }
  return eta;
}

}  // namespace

std::string to_string(Averaging averaging) {
  return averaging == Averaging::conditional ? "conditional" : "population";
}

Averaging averaging_from_string(const std::string& text) {
  if (text == "conditional") return Averaging::conditional;
  if (text == "population") return Averaging::population;
  throw_usage("averaging must be \"conditional\" or \"population\", got \"" + text + "\"");
}

std::vector<double> conditional_probs(const FittedModel& fit, const std::string& formulation,
                                      const std::string& attribute, double u) {
  const auto levels = resolve_levels(fit.spec, formulation, attribute);
  return category_probs(fit.spec, fit.params, levels, u).probs;
}

std::vector<double> population_averaged_probs(const FittedModel& fit,
                                              const std::string& formulation,
                                              const std::string& attribute, int quad_order) {
  const auto levels = resolve_levels(fit.spec, formulation, attribute);
  const double sigma = fit.sigma_u();
  if (sigma == 0.0) return category_probs(fit.spec, fit.params, levels, 0.0).probs;
  const QuadratureRule rule = gauss_hermite(quad_order, false);
  const auto eta = cumulative_logits(fit.spec, fit.params, levels);
  std::vector<double> out(static_cast<std::size_t>(fit.spec.categories));
  double prev = 0.0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    const double cum = mean_expit(eta[k], sigma, rule);
    out[k] = cum - prev;
    prev = cum;
  }
  out.back() = 1.0 - prev;
  return out;
}

std::vector<double> predict_probs(const FittedModel& fit, const std::string& formulation,
                                  const std::string& attribute, Averaging averaging,
                                  int quad_order) {
  return averaging == Averaging::conditional
             ? conditional_probs(fit, formulation, attribute, 0.0)
             : population_averaged_probs(fit, formulation, attribute, quad_order);
}

std::vector<std::string> formulation_levels(const FittedModel& fit) {
  const auto idx = fit.spec.term_index(Factor::formulation);
  if (!idx) throw_usage("model has no formulation term");
  return fit.spec.terms[*idx].levels;
}

std::vector<std::string> attribute_levels(const FittedModel& fit) {
  const auto idx = fit.spec.term_index(Factor::attribute);
  if (!idx) return {"all"};
  return fit.spec.terms[*idx].levels;
}

PredictionTable predict_table(const FittedModel& fit, int threshold, Averaging averaging,
                              int quad_order) {
  if (threshold < 2 || threshold > fit.spec.categories) {
    throw_usage("threshold must lie in 2.." + std::to_string(fit.spec.categories));
  }
  PredictionTable table;
  table.formulations = formulation_levels(fit);
  table.attributes = attribute_levels(fit);
  table.averaging = averaging;
  table.threshold = threshold;
  table.categories = fit.spec.categories;
  for (const auto& f : table.formulations) {
    for (const auto& a : table.attributes) {
      PredictionCell cell;
      cell.probs = predict_probs(fit, f, a, averaging, quad_order);
      for (int j = threshold; j <= table.categories; ++j) {
        cell.acceptance += cell.probs[static_cast<std::size_t>(j - 1)];
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

AcceptanceScores acceptance_scores(const PredictionTable& table) {
  AcceptanceScores s;
  s.formulations = table.formulations;
  s.attributes = table.attributes;
  for (std::size_t f = 0; f < table.formulations.size(); ++f) {
    std::vector<double> row;
    double sum = 0.0;
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
      row.push_back(table.at(f, a).acceptance);
      sum += row.back();
    }
    s.mean.push_back(sum / static_cast<double>(row.size()));
    s.per_attribute.push_back(std::move(row));
  }
  return s;
}

AcceptanceScores acceptance_score(const FittedModel& fit, int threshold, Averaging averaging,
                                  int quad_order) {
  return acceptance_scores(predict_table(fit, threshold, averaging, quad_order));
}

std::vector<RankEntry> rank_formulations(const AcceptanceScores& scores) {
  std::vector<std::size_t> order(scores.formulations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.mean[a] > scores.mean[b];
  });
  std::vector<RankEntry> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.push_back({scores.formulations[order[i]], scores.mean[order[i]], i + 1, false});
  }
  constexpr double kTieTolerance = 1e-12;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (std::abs(out[i].score - out[i - 1].score) <= kTieTolerance) {
      out[i].tied = out[i - 1].tied = true;
    }
  }
  return out;
}

std::vector<RankEntry> rank_formulations(const FittedModel& fit, int threshold,
                                         Averaging averaging, int quad_order) {
  return rank_formulations(acceptance_score(fit, threshold, averaging, quad_order));
}

void write_prediction_csv(std::ostream& out, const PredictionTable& table) {
  out << "attribute,category";
  for (const auto& f : table.formulations) out << ',' << csv_field(f);
  out << '\n';
  for (std::size_t a = 0; a < table.attributes.size(); ++a) {
    for (int j = 1; j <= table.categories; ++j) {
      out << csv_field(table.attributes[a]) << ',' << j;
      for (std::size_t f = 0; f < table.formulations.size(); ++f) {
        out << ',' << format_number(table.at(f, a).probs[static_cast<std::size_t>(j - 1)]);
      }
      out << '\n';
    }
    out << csv_field(table.attributes[a]) << ",P(Y>=" << table.threshold << ')';
    for (std::size_t f = 0; f < table.formulations.size(); ++f) {
      out << ',' << format_number(table.at(f, a).acceptance);
    }
    out << '\n';
  }
}

void write_observed_vs_predicted(std::ostream& out, const PredictionTable& table,
                                 const OrdinalDataset& ds) {
  const bool pooled = table.attributes.size() == 1 && table.attributes[0] == "all" &&
                      !ds.attributes().find("all");
  // counts[f][a][j] in the table's level order.
  const std::size_t nf = table.formulations.size();
  const std::size_t na = table.attributes.size();
  const auto nj = static_cast<std::size_t>(table.categories);
  std::vector<double> counts(nf * na * nj, 0.0);
  for (const auto& obs : ds.observations()) {
    const auto& fname = ds.formulations().name(obs.formulation);
    const auto fit = std::find(table.formulations.begin(), table.formulations.end(), fname);
    if (fit == table.formulations.end()) continue;
    std::size_t a = 0;
    if (!pooled) {
      const auto& aname = ds.attributes().name(obs.attribute);
      const auto ait = std::find(table.attributes.begin(), table.attributes.end(), aname);
      if (ait == table.attributes.end()) continue;
      a = static_cast<std::size_t>(ait - table.attributes.begin());
    }
    if (obs.response < 1 || static_cast<std::size_t>(obs.response) > nj) continue;
    const auto f = static_cast<std::size_t>(fit - table.formulations.begin());
    counts[(f * na + a) * nj + static_cast<std::size_t>(obs.response - 1)] += 1.0;
  }
  out << "formulation,attribute,category,n,observed,predicted\n";
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t a = 0; a < na; ++a) {
      double n = 0.0;
      for (std::size_t j = 0; j < nj; ++j) n += counts[(f * na + a) * nj + j];
      for (std::size_t j = 0; j < nj; ++j) {
        const double obs = n > 0 ? counts[(f * na + a) * nj + j] / n : 0.0;
        out << csv_field(table.formulations[f]) << ',' << csv_field(table.attributes[a]) << ','
            << j + 1 << ',' << format_number(n) << ',' << format_number(obs) << ','
            << format_number(table.at(f, a).probs[j]) << '\n';
      }
    }
  }
}

}  // namespace sensilogit
