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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sensilogit/error.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/predict.hpp"

using namespace sensilogit;

namespace {

std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
}

// Same model with the formulation levels registered in `order`.
FittedModel reorder_formulations(const FittedModel& fit, const std::vector<std::string>& order) {
  FittedModel out = fit;
  auto& term = out.spec.terms[0];
  const auto& old_levels = fit.spec.terms[0].levels;
  term.levels = order;
  term.reference = index_of(order, old_levels[fit.spec.terms[0].reference]);
  const ParamLayout a(fit.spec), b(out.spec);
  out.params = fit.params;
  for (std::size_t k = 0; k < a.cutpoints(); ++k) {
    for (std::size_t l = 0; l < old_levels.size(); ++l) {
      if (auto src = a.slope(0, k, l)) {
        out.params(static_cast<Eigen::Index>(*b.slope(0, k, index_of(order, old_levels[l])))) =
            fit.params(static_cast<Eigen::Index>(*src));
      }
    }
  }
  return out;
}

FittedModel uniform_fit(int formulations, double sigma) {
  ModelSpec spec;
  spec.categories = 5;
  spec.random_intercept = sigma > 0.0;
  FactorTerm f;
  for (int i = 1; i <= formulations; ++i) f.levels.push_back("F" + std::to_string(i));
  spec.terms = {f};
  FittedModel fit;
  fit.spec = spec;
  fit.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ParamLayout(spec).size()));
  for (int k = 0; k < 4; ++k) fit.params(k) = std::log((k + 1.0) / (4.0 - k));
  if (sigma > 0.0) fit.params(fit.params.size() - 1) = std::log(sigma);
  return fit;
}

}  // namespace

TEST_CASE("worked plug-in example from the reference coefficients") {
  const auto fit = oracle::reference_fit();
  const auto p = conditional_probs(fit, "F4", "body", 0.0);
  const double want = oracle::expit(0.04 - 1.84 - 0.26);
  CHECK(p[0] + p[1] == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(p[0] + p[1] - 0.1131) < 5e-4);
}

TEST_CASE("uniform model gives uniform probabilities and the trivial score") {
  for (double sigma : {0.0, 1.0}) {
    const auto fit = uniform_fit(3, sigma);
    const auto p = conditional_probs(fit, "F2", "ignored", 0.0);
    for (double x : p) CHECK(x == doctest::Approx(0.2).epsilon(1e-12));
    if (sigma == 0.0) {
      const auto s = acceptance_score(fit);
      for (double m : s.mean) CHECK(m == doctest::Approx(0.4).epsilon(1e-12));
      const auto r = rank_formulations(fit);
      for (const auto& e : r) CHECK(e.tied);
      CHECK(r[0].formulation == "F1");
      CHECK(r[2].formulation == "F3");
    }
  }
}

TEST_CASE("population averaging agrees with Monte Carlo integration") {
  const auto fit = oracle::reference_fit();
  const auto pa = population_averaged_probs(fit, "F7", "sweetness");
  const auto levels = std::vector<std::size_t>{6, 2};
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, oracle::kSigma);
  // Linear predictors from direct evaluation at u = 0 shift by u.
  std::vector<double> eta(4);
  double below = 0.0;
  for (int k = 1; k <= 4; ++k) {
    below += oracle::category_prob(fit.spec, fit.params, levels, k, 0.0);
    eta[k - 1] = std::log(below / (1.0 - below));
  }
  std::vector<double> mc(5, 0.0);
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const double u = n(rng);
    double prev = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double cum = oracle::expit(eta[k] + u);
      mc[k] += cum - prev;
      prev = cum;
    }
    mc[4] += 1.0 - prev;
  }
  double total = 0.0;
  for (int y = 0; y < 5; ++y) {
    CHECK(std::abs(pa[y] - mc[y] / draws) < 1e-3);
    total += pa[y];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("averaging without a random intercept is the conditional value") {
  auto fit = oracle::reference_fit();
  fit.spec.random_intercept = false;
  fit.params.conservativeResize(fit.params.size() - 1);
  const auto a = population_averaged_probs(fit, "F3", "aroma");
  const auto c = conditional_probs(fit, "F3", "aroma");
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == c[j]);
}

TEST_CASE("quadrature order has converged by 21") {
  const auto fit = oracle::reference_fit();
  for (const auto& f : {"F1", "F6", "F11"}) {
    const auto lo = population_averaged_probs(fit, f, "overall", 21);
    const auto hi = population_averaged_probs(fit, f, "overall", 41);
    for (std::size_t j = 0; j < lo.size(); ++j) CHECK(std::abs(lo[j] - hi[j]) < 1e-6);
  }
}

TEST_CASE("averaged acceptance lies strictly inside the conditional range") {
  const auto fit = oracle::reference_fit();
  const auto rule = gauss_hermite(kDefaultPredictionQuadOrder, false);
  const auto table = predict_table(fit);
  for (std::size_t f = 0; f < table.formulations.size(); ++f) {
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
      double lo = 1.0, hi = 0.0;
      for (double x : rule.nodes) {
        const auto p = conditional_probs(fit, table.formulations[f], table.attributes[a],
                                         std::sqrt(2.0) * oracle::kSigma * x);
        const double acc = p[3] + p[4];
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
      }
      const double v = table.at(f, a).acceptance;
      CHECK(v > lo);
      CHECK(v < hi);
    }
  }
}

TEST_CASE("reference acceptance rankings") {
  const auto fit = oracle::reference_fit();
  const auto s = acceptance_score(fit);
  const auto sweet = index_of(s.attributes, "sweetness");
  std::vector<std::pair<double, std::string>> by;
  for (std::size_t f = 0; f < s.formulations.size(); ++f) by.emplace_back(s.per_attribute[f][sweet], s.formulations[f]);
  std::sort(by.rbegin(), by.rend());
  CHECK(std::set<std::string>{by[0].second, by[1].second, by[2].second} ==
        std::set<std::string>{"F6", "F13", "F4"});

  const auto r = rank_formulations(fit);
  CHECK(std::set<std::string>{r[0].formulation, r[1].formulation, r[2].formulation} ==
        std::set<std::string>{"F4", "F6", "F13"});
  CHECK(r.back().formulation == "F7");
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].rank == i + 1);
}

TEST_CASE("ranking ignores registration order") {
  const auto fit = oracle::reference_fit();
  auto names = fit.spec.terms[0].levels;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(names.begin(), names.end(), rng);
    const auto r1 = rank_formulations(fit);
    const auto r2 = rank_formulations(reorder_formulations(fit, names));
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].formulation == r2[i].formulation);
      CHECK(r1[i].score == doctest::Approx(r2[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("duplicate formulations tie at adjacent ranks") {
  auto fit = oracle::reference_fit();
  const ParamLayout layout(fit.spec);
  for (std::size_t k = 0; k < 4; ++k) {
    fit.params(static_cast<Eigen::Index>(*layout.slope(0, k, 9))) =
        fit.params(static_cast<Eigen::Index>(*layout.slope(0, k, 4)));
  }
  const auto r = rank_formulations(fit);
  const auto i5 = std::find_if(r.begin(), r.end(), [](const RankEntry& e) { return e.formulation == "F5"; });
  const auto i10 = std::find_if(r.begin(), r.end(), [](const RankEntry& e) { return e.formulation == "F10"; });
  CHECK(i10 - i5 == 1);
  CHECK(i5->tied);
  CHECK(i10->tied);
}

TEST_CASE("a dominant formulation wins every attribute") {
  auto fit = oracle::reference_fit();
  const ParamLayout layout(fit.spec);
  for (std::size_t k = 0; k < 4; ++k) fit.params(static_cast<Eigen::Index>(*layout.slope(0, k, 7))) = -8.0;
  const auto s = acceptance_score(fit);
  for (std::size_t a = 0; a < s.attributes.size(); ++a) {
    for (std::size_t f = 0; f < s.formulations.size(); ++f) {
      if (f != 7) CHECK(s.per_attribute[7][a] > s.per_attribute[f][a]);
    }
  }
}

TEST_CASE("prediction errors") {
  const auto fit = oracle::reference_fit();
  CHECK_THROWS_WITH_AS(conditional_probs(fit, "F99", "aroma"), doctest::Contains("unknown formulation level"), Error);
  CHECK_THROWS_AS(predict_table(fit, 1), Error);
  CHECK_THROWS_AS(predict_table(fit, 6), Error);
  CHECK(averaging_from_string(to_string(Averaging::conditional)) == Averaging::conditional);
}

TEST_CASE("wide prediction export") {
  const auto fit = oracle::reference_fit();
  const auto table = predict_table(fit);
  std::ostringstream out;
  write_prediction_csv(out, table);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("attribute,category,F1,", 0) == 0);
  CHECK(std::count(line.begin(), line.end(), ',') == 14);
  int rows = 0, accept_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find("P(Y>=4)") != std::string::npos) ++accept_rows;
  }
  CHECK(rows == 5 * 6);
  CHECK(accept_rows == 5);
}
